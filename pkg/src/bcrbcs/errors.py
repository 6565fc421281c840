"""Exception types shared across the package."""

from __future__ import annotations

import numpy as np


class ParameterError(ValueError):
    """A parameter lies outside its mathematical domain."""


class ShapeError(ValueError):
    """Array dimensions are inconsistent."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float = float("nan")):
        super().__init__(message)
        self.error_estimate = error_estimate


class RankDeficientError(np.linalg.LinAlgError):
    """A factorization found fewer independent columns than required."""

    def __init__(self, message: str, rank: int):
        super().__init__(message)
        self.rank = rank


class InfeasibleError(RuntimeError):
    """The equality constraints admit no solution."""


class ConfigError(ValueError):
    """Malformed or out-of-domain run configuration."""
