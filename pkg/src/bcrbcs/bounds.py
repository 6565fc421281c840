"""Bayesian Cramer-Rao bounds for non-blind and blind compressed sensing.

The Fisher information splits as ``J = J_D + J_P`` (data plus prior). For the
non-blind model ``J_D = n sigma_r^2 / sigma_e^2 Psi^T Psi``. For the blind model
the data information of one Gaussian measurement is diagonal with entries

    J_D,ii = (2 sigma_r^2 / m) (A1 - sigma_e^2 A2)

where A1, A2 are first-order (single active coefficient) expansions of
``E[1 / (sigma_e^2 + sigma_r^2 |w|^2)^k]`` under the Bernoulli-Gaussian prior.
Those reduce to two one-dimensional integrals

    C1(a) = int exp(-x^2) / (a^2 + x^2) dx
    C2(a) = int exp(-x^2) / (a^2 + x^2)^2 dx

with ``a = sigma_e / (sqrt(2) sigma_r sigma)``. Every ``exp(a^2)`` factor is
carried by :func:`erfcx` so nothing overflows for large ``a``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .model import BgPrior, CsModel, Ensemble

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)

# Above this the erfc-based closed forms lose more than a few digits.
_ERFCX_ASYMPTOTIC = 25.0
_SERIES_A = 8.0
_SERIES_TERMS = 24

# m (1 - p) at or below this is where the single-active expansion is trusted.
REGIME_LIMIT = 0.1


def _square_split(a: float) -> tuple[float, float]:
    """``a*a`` as an unevaluated sum ``hi + lo`` (Dekker product)."""
    hi = a * a
    c = 134217729.0 * a
    ah = c - (c - a)
    al = a - ah
    lo = ((ah * ah - hi) + 2.0 * ah * al) + al * al
    return hi, lo


def _asymptotic(a: float, coeff) -> float:
    """Sum ``coeff(k) * (-u)^k`` with ``u = 1/(2a^2)``, ``k = 0.._SERIES_TERMS``."""
    u = 0.5 / (a * a)
    total = 0.0
    odd_fact = 1.0  # (2k-1)!!
    power = 1.0
    for k in range(_SERIES_TERMS + 1):
        if k > 0:
            odd_fact *= 2 * k - 1
            power *= -u
        total += coeff(k, odd_fact) * power
    return total


def erfcx(a: float) -> float:
    """Scaled complementary error function ``exp(a^2) erfc(a)`` for ``a >= 0``."""
    a = float(a)
    if math.isnan(a) or a < 0.0:
        raise ParameterError(f"erfcx requires a >= 0, got {a}")
    if math.isinf(a):
        return 0.0
    if a < _ERFCX_ASYMPTOTIC:
        hi, lo = _square_split(a)
        return math.exp(hi) * math.erfc(a) * (1.0 + lo)
    return _asymptotic(a, lambda k, f: f) / (a * SQRT_PI)


def _check_positive_a(a: float) -> float:
    a = float(a)
    if not a > 0.0:
        raise ParameterError(f"a must be positive, got {a}")
    return a


def c1(a: float) -> float:
    """``int_R exp(-x^2)/(a^2+x^2) dx = (pi/a) erfcx(a)``."""
    a = _check_positive_a(a)
    return math.pi * erfcx(a) / a


def c2(a: float) -> float:
    """``int_R exp(-x^2)/(a^2+x^2)^2 dx``.

    Closed form ``pi/(2a^3) [(1 - 2a^2) erfcx(a) + 2a/sqrt(pi)]``, obtained as
    ``-dC1/d(a^2)``. The bracket cancels like ``a^2`` for large ``a``, so past
    ``a = 8`` the asymptotic expansion
    ``sqrt(pi)/a^4 sum_k (-1)^k (k+1)(2k-1)!! / (2a^2)^k`` is used instead.
    """
    a = _check_positive_a(a)
    if a < _SERIES_A:
        return math.pi / (2.0 * a**3) * ((1.0 - 2.0 * a * a) * erfcx(a) + 2.0 * a / SQRT_PI)
    return SQRT_PI / a**4 * _asymptotic(a, lambda k, f: (k + 1) * f)


def c1_minus_a2c2(a: float) -> float:
    """``C1 - a^2 C2 = int_R x^2 exp(-x^2)/(a^2+x^2)^2 dx`` without cancellation."""
    a = _check_positive_a(a)
    if a < _SERIES_A:
        return math.pi / (2.0 * a) * ((1.0 + 2.0 * a * a) * erfcx(a) - 2.0 * a / SQRT_PI)
    # sum_{k>=1} (-1)^{k+1} 2k (2k-1)!! u^k, written with the shared helper
    return SQRT_PI / (2.0 * a * a) * -_asymptotic(a, lambda k, f: 2 * k * f)


def nonblind_data_info(n: int, sigma_r2: float, sigma_e2: float, psi: np.ndarray) -> np.ndarray:
    if not sigma_e2 > 0.0:
        raise ParameterError("sigma_e2 must be positive: noiseless data carry unbounded information")
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    psi = np.asarray(psi, dtype=float)
    return (n * sigma_r2 / sigma_e2) * (psi.T @ psi)


def gaussian_prior_info(variances) -> np.ndarray:
    """``diag(1/sigma_i^2)`` for independent zero-mean Gaussian coefficients."""
    variances = np.asarray(variances, dtype=float)
    if np.any(~(variances > 0.0)):
        raise ParameterError("all prior variances must be positive")
    return np.diag(1.0 / variances)


def bg_prior_info(prior: BgPrior) -> float:
    """Diagonal prior information ``(1 - p)/sigma^2`` of the Bernoulli-Gaussian prior.

    This is the spike-free approximation; the exact information of the
    smoothed density is computed in :mod:`bcrbcs.oracles`.
    """
    return (1.0 - prior.p) / prior.sigma**2


class Case(str, enum.Enum):
    NONBLIND = "nonblind"
    BLIND = "blind"


@dataclass(frozen=True)
class FisherDecomposition:
    j_data: np.ndarray
    j_prior: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.j_data + self.j_prior


@dataclass(frozen=True)
class BlindCoefficients:
    """Intermediates of the blind data information."""

    a: float
    c1: float
    c2: float
    b1: float
    b2: float
    a1: float
    a2: float
    # A1 - sigma_e^2 A2, assembled from C1 - a^2 C2 rather than by subtraction
    gap: float
    regime: str


def _log_pow(p: float, k: int) -> float:
    if k == 0:
        return 0.0
    return k * math.log(p) if p > 0.0 else -math.inf


def blind_a_coeffs(prior: BgPrior, sigma_e2: float, sigma_r2: float, m: int) -> BlindCoefficients:
    if not sigma_e2 > 0.0:
        raise ParameterError("sigma_e2 must be positive for the blind bound (C2 diverges at a = 0)")
    if not sigma_r2 > 0.0:
        raise ParameterError(f"sigma_r2 must be positive, got {sigma_r2}")
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    p, sigma = prior.p, prior.sigma
    sigma_e = math.sqrt(sigma_e2)
    a = sigma_e / (math.sqrt(2.0) * math.sqrt(sigma_r2) * sigma)
    cc1, cc2 = c1(a), c2(a)
    b1 = cc1 / (math.sqrt(2.0) * sigma * sigma_r2)
    b2 = cc2 / (2.0 * math.sqrt(2.0) * sigma**3 * sigma_r2**2)
    b_gap = c1_minus_a2c2(a) / (math.sqrt(2.0) * sigma * sigma_r2)

    log_zero = _log_pow(p, m)
    if p < 1.0:
        log_one = (
            math.log(m) + _log_pow(p, m - 1) + math.log1p(-p) - math.log(sigma * SQRT_2PI)
        )
    else:
        log_one = -math.inf
    log_se2 = math.log(sigma_e2)
    a1 = math.exp(np.logaddexp(log_zero - log_se2, log_one + math.log(b1)))
    a2 = math.exp(np.logaddexp(log_zero - 2.0 * log_se2, log_one + math.log(b2)))
    gap = math.exp(log_one + math.log(b_gap)) if b_gap > 0.0 else 0.0

    if p == 1.0:
        regime = "degenerate"
    elif m * (1.0 - p) <= REGIME_LIMIT and gap >= 0.0:
        regime = "ok"
    else:
        regime = "out_of_regime"
    return BlindCoefficients(a, cc1, cc2, b1, b2, a1, a2, gap, regime)


def blind_data_info_diag(coeffs: BlindCoefficients, sigma_r2: float, m: int) -> float:
    return 2.0 * sigma_r2 / m * coeffs.gap


@dataclass(frozen=True)
class BoundReport:
    case: Case
    per_coeff_bound: np.ndarray
    avg_bound: float
    components: FisherDecomposition
    intermediates: BlindCoefficients | None = None
    regime: str = "ok"
    extra: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.per_coeff_bound.shape[0]

    @property
    def bound_db(self) -> float:
        """``10 log10(m * avg_bound)``, comparable with a per-vector squared error in dB."""
        total = self.m * self.avg_bound
        if math.isinf(total):
            return math.inf
        return 10.0 * math.log10(total)


def _invert_information(j: np.ndarray) -> np.ndarray:
    """Diagonal of ``J^-1``, ``inf`` for directions with zero information."""
    if np.count_nonzero(j - np.diag(np.diag(j))) == 0:
        diag = np.diag(j)
        with np.errstate(divide="ignore"):
            return np.where(diag > 0.0, 1.0 / np.where(diag > 0.0, diag, 1.0), math.inf)
    try:
        return np.diag(np.linalg.inv(j))
    except np.linalg.LinAlgError:
        return np.full(j.shape[0], math.inf)


def nonblind_bcrb(model: CsModel, prior_info: np.ndarray | None = None) -> BoundReport:
    """Per-coefficient bound ``diag((J_D + J_P)^-1)`` for known ``D``.

    ``prior_info`` defaults to the Bernoulli-Gaussian constant times identity.
    """
    m = model.m
    j_data = nonblind_data_info(model.n, model.ensemble.sigma_r2, model.sigma_e2, model.basis)
    if prior_info is None:
        prior_info = bg_prior_info(model.prior) * np.eye(m)
    prior_info = np.asarray(prior_info, dtype=float)
    comps = FisherDecomposition(j_data, prior_info)
    per = _invert_information(comps.total)
    avg = float(np.mean(per))
    return BoundReport(Case.NONBLIND, per, avg, comps)


def blind_bcrb(model: CsModel) -> BoundReport:
    """Bound on each coefficient when the dictionary itself is unknown.

    Uses the data information of one measurement, so it does not depend on
    ``n``. Only defined for Gaussian measurement ensembles.
    """
    if model.ensemble.kind is not Ensemble.GAUSSIAN:
        raise ParameterError("the blind bound is derived for Gaussian measurement matrices only")
    m = model.m
    sigma_r2 = model.ensemble.sigma_r2
    coeffs = blind_a_coeffs(model.prior, model.sigma_e2, sigma_r2, m)
    jd = blind_data_info_diag(coeffs, sigma_r2, m)
    jp = bg_prior_info(model.prior)
    regime = coeffs.regime
    if jd < 0.0:
        regime = "out_of_regime"
        jd = 0.0
    total = jd + jp
    value = 1.0 / total if total > 0.0 else math.inf
    comps = FisherDecomposition(jd * np.eye(m), jp * np.eye(m))
    return BoundReport(Case.BLIND, np.full(m, value), value, comps, coeffs, regime)
