"""Bernoulli-Gaussian sparse signals, random measurement ensembles and noisy measurements.

All sampling goes through an explicit ``numpy.random.Generator``; nothing here
touches global random state. :func:`trial_rng` is the one place that maps a
(master seed, grid point, trial index) triple to an independent substream.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError

_UNIT_NORM_TOL = 1e-10


@dataclass(frozen=True)
class BgPrior:
    """Bernoulli-Gaussian prior on each coefficient.

    ``p`` is the probability that a coefficient is exactly zero, ``sigma`` the
    standard deviation of an active coefficient. ``sigma0`` is the width of
    the narrow Gaussian that stands in for the spike when the prior density
    has to be differentiated; sampling never uses it.
    """

    p: float
    sigma: float
    sigma0: float = 1e-5

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")
        if not self.sigma > 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not self.sigma0 > 0.0:
            raise ParameterError(f"sigma0 must be positive, got {self.sigma0}")
        if not self.sigma0 < self.sigma:
            raise ParameterError(
                f"sigma0 must be smaller than sigma, got {self.sigma0} >= {self.sigma}"
            )

    def expected_active(self, m: int) -> float:
        return m * (1.0 - self.p)


class Ensemble(str, enum.Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class EnsembleSpec:
    kind: Ensemble = Ensemble.GAUSSIAN
    sigma_r2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Ensemble(self.kind))
        if not self.sigma_r2 > 0.0:
            raise ParameterError(f"sigma_r2 must be positive, got {self.sigma_r2}")


@dataclass(frozen=True)
class CsModel:
    """Dimensions and statistics of the noisy model ``y = Phi Psi w + e``.

    ``psi`` defaults to the m x m identity. Its columns must have unit norm,
    which the blind bound relies on.
    """

    m: int
    n: int
    prior: BgPrior
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    sigma_e2: float = 1e-4
    psi: np.ndarray | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError(f"m must be >= 1, got {self.m}")
        if self.n < 0:
            raise ParameterError(f"n must be >= 0, got {self.n}")
        if not self.sigma_e2 >= 0.0:
            raise ParameterError(f"sigma_e2 must be >= 0, got {self.sigma_e2}")
        if self.psi is not None:
            psi = np.asarray(self.psi, dtype=float)
            if psi.shape != (self.m, self.m):
                raise ShapeError(f"psi must be {self.m}x{self.m}, got {psi.shape}")
            norms = np.linalg.norm(psi, axis=0)
            if np.max(np.abs(norms - 1.0)) > _UNIT_NORM_TOL:
                raise ParameterError("every column of psi must have unit Euclidean norm")
            object.__setattr__(self, "psi", psi)

    @property
    def basis(self) -> np.ndarray:
        return np.eye(self.m) if self.psi is None else self.psi

    @property
    def identity_basis(self) -> bool:
        return self.psi is None

    def with_n(self, n: int) -> "CsModel":
        return CsModel(self.m, n, self.prior, self.ensemble, self.sigma_e2, self.psi)


def trial_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one trial.

    The substream is ``SeedSequence(master_seed, spawn_key=key)``, so a trial
    is reproducible from its key alone regardless of which worker runs it or
    in what order.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def sample_signal(prior: BgPrior, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an m-vector from the Bernoulli-Gaussian prior (exact zeros, no smoothing)."""
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    active = rng.random(m) >= prior.p
    w = np.zeros(m)
    w[active] = prior.sigma * rng.standard_normal(int(active.sum()))
    return w


def sparsity(w: np.ndarray) -> int:
    """Number of nonzero coefficients."""
    return int(np.count_nonzero(w))


def sample_matrix(spec: EnsembleSpec, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """n x m matrix of i.i.d. zero-mean entries with variance ``spec.sigma_r2``."""
    if n < 1 or m < 1:
        raise ParameterError(f"matrix dimensions must be >= 1, got {n}x{m}")
    scale = math.sqrt(spec.sigma_r2)
    if spec.kind is Ensemble.GAUSSIAN:
        return scale * rng.standard_normal((n, m))
    signs = rng.integers(0, 2, size=(n, m)) * 2.0 - 1.0
    return scale * signs


def measure(
    model: CsModel, phi: np.ndarray, w: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(y, d)`` with ``d = phi @ psi`` and ``y = d @ w + e``."""
    phi = np.asarray(phi, dtype=float)
    w = np.asarray(w, dtype=float)
    if phi.ndim != 2 or phi.shape[1] != model.m:
        raise ShapeError(f"phi must have {model.m} columns, got shape {phi.shape}")
    if w.shape != (model.m,):
        raise ShapeError(f"w must have length {model.m}, got shape {w.shape}")
    d = phi if model.identity_basis else phi @ model.psi
    y = d @ w
    if model.sigma_e2 > 0.0:
        y = y + math.sqrt(model.sigma_e2) * rng.standard_normal(phi.shape[0])
    return y, d


def measure_blind(
    model: CsModel, phi_row: np.ndarray, w: np.ndarray, rng: np.random.Generator
) -> float:
    """Single scalar measurement ``d^T w + e`` with ``d^T = phi_row^T psi``."""
    phi_row = np.asarray(phi_row, dtype=float).reshape(1, -1)
    y, _ = measure(model, phi_row, w, rng)
    return float(y[0])
