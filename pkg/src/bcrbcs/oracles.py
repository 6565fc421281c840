"""Brute-force checks for the closed forms in :mod:`bcrbcs.bounds`.

One-dimensional integrals go through QUADPACK (``scipy.integrate.quad``) on
the raw integrands, never through erfc. The m-dimensional expectations are
estimated by Monte Carlo over the exact (unsmoothed) Bernoulli-Gaussian prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ParameterError, QuadratureError
from .model import BgPrior

SPIKE_SPLIT = 40.0
MIN_MC_SAMPLES = 10_000
MIN_SUBDIVISIONS = 50
_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-20
    rel_tol: float = 1e-11
    max_subdivisions: int = 500
    # in units of the slab standard deviation (or of x for C1/C2)
    truncation_radius: float = 14.0

    def __post_init__(self):
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ParameterError("quadrature tolerances must be positive")
        if self.max_subdivisions < MIN_SUBDIVISIONS:
            raise ParameterError(f"max_subdivisions must be >= {MIN_SUBDIVISIONS} to leave room for breakpoints")
        if self.truncation_radius < 10.0:
            raise ParameterError("truncation_radius below 10 leaves a visible Gaussian tail")


def _quad(f, lo: float, hi: float, spec: QuadratureSpec, points=None, abs_floor: float = 0.0) -> float:
    abs_tol = max(spec.abs_tol, abs_floor)
    pts = None
    if points is not None:
        pts = [x for x in points if lo < x < hi] or None
    val, err, info = integrate.quad(
        f, lo, hi, epsabs=abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions,
        points=pts, full_output=True,
    )[:3]
    tol = max(abs_tol, spec.rel_tol * abs(val))
    # QUADPACK's estimate is conservative; allow a modest factor before failing.
    if err > 100.0 * tol:
        raise QuadratureError(
            f"quadrature on [{lo:g}, {hi:g}] stalled: value {val:.6g}, error estimate {err:.3g}",
            err,
        )
    return val


def _even_integral(f, scale: float, spec: QuadratureSpec, radius: float) -> float:
    """``int_{-radius}^{radius} f`` for even ``f`` with a feature of width ``scale`` at 0."""
    breaks = [scale * k for k in (1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0)]
    return 2.0 * _quad(f, 0.0, radius, spec, points=breaks)


def quad_c1(a: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    if not a > 0.0:
        raise ParameterError(f"a must be positive, got {a}")
    a2 = a * a
    return _even_integral(lambda x: math.exp(-x * x) / (a2 + x * x), a, spec, spec.truncation_radius)


def quad_c2(a: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    if not a > 0.0:
        raise ParameterError(f"a must be positive, got {a}")
    a2 = a * a
    return _even_integral(
        lambda x: math.exp(-x * x) / (a2 + x * x) ** 2, a, spec, spec.truncation_radius
    )


@dataclass(frozen=True)
class PriorInfoBreakdown:
    """Magnitudes of the three pieces of ``int (p')^2 / p`` for the smoothed prior.

    ``d1`` is the spike-spike term, ``d2`` the (doubled) cross term and ``d3``
    the slab-slab term, so ``j_pii = d1 + d2 + d3``. ``curvature_integral`` is
    ``int p''``, which vanishes analytically; ``curvature_scale`` is
    ``int |p''|`` for judging it.
    """

    d1: float
    d2: float
    d3: float
    j_pii: float
    curvature_integral: float
    curvature_scale: float


class _SmoothedPrior:
    """``p(w) = A exp(-w^2/2 s0^2) + B exp(-w^2/2 s^2)`` evaluated in log space."""

    def __init__(self, prior: BgPrior):
        self.s0, self.s = prior.sigma0, prior.sigma
        self.log_a = math.log(prior.p) - math.log(self.s0 * math.sqrt(2 * math.pi)) if prior.p > 0 else -math.inf
        self.log_b = math.log1p(-prior.p) - math.log(self.s * math.sqrt(2 * math.pi)) if prior.p < 1 else -math.inf

    def logs(self, w: float) -> tuple[float, float, float]:
        l1 = self.log_a - w * w / (2 * self.s0**2)
        l2 = self.log_b - w * w / (2 * self.s**2)
        return l1, l2, float(np.logaddexp(l1, l2))

    def spike_term(self, w: float) -> float:
        l1, _, ld = self.logs(w)
        return w * w / self.s0**4 * math.exp(2 * l1 - ld)

    def cross_term(self, w: float) -> float:
        l1, l2, ld = self.logs(w)
        return 2 * w * w / (self.s0**2 * self.s**2) * math.exp(l1 + l2 - ld)

    def slab_term(self, w: float) -> float:
        _, l2, ld = self.logs(w)
        return w * w / self.s**4 * math.exp(2 * l2 - ld)

    def fisher_integrand(self, w: float) -> float:
        l1, l2, ld = self.logs(w)
        score = -w * (math.exp(l1 - ld) / self.s0**2 + math.exp(l2 - ld) / self.s**2)
        return score * score * math.exp(ld)

    def curvature(self, w: float) -> float:
        l1, l2, _ = self.logs(w)
        return (math.exp(l1) * (w * w / self.s0**4 - 1 / self.s0**2)
                + math.exp(l2) * (w * w / self.s**4 - 1 / self.s**2))

    def abs_curvature(self, w: float) -> float:
        l1, l2, _ = self.logs(w)
        return (math.exp(l1) * abs(w * w / self.s0**4 - 1 / self.s0**2)
                + math.exp(l2) * abs(w * w / self.s**4 - 1 / self.s**2))


def _spike_resolved(f, prior: BgPrior, spec: QuadratureSpec, abs_floor: float = 0.0) -> float:
    s0, s = prior.sigma0, prior.sigma
    inner = SPIKE_SPLIT * s0
    radius = spec.truncation_radius * s
    near = _quad(f, 0.0, inner, spec, [s0 * k for k in (1.0, 2.0, 5.0, 10.0, 20.0)], abs_floor)
    far = _quad(f, inner, radius, spec, [s * k for k in (0.01, 0.1, 1.0, 3.0)], abs_floor)
    return 2.0 * (near + far)


def prior_info_breakdown(prior: BgPrior, spec: QuadratureSpec = QuadratureSpec()) -> PriorInfoBreakdown:
    """Prior Fisher information of the spike-smoothed Bernoulli-Gaussian density.

    The domain is split at ``40 sigma0`` so the adaptive rule sees the spike.
    Note that the spike-spike term is about ``p / sigma0^2``: the smoothed
    prior information grows without bound as ``sigma0 -> 0``.
    """
    sp = _SmoothedPrior(prior)
    d1 = _spike_resolved(sp.spike_term, prior, spec) if prior.p > 0 else 0.0
    d2 = _spike_resolved(sp.cross_term, prior, spec) if 0 < prior.p < 1 else 0.0
    d3 = _spike_resolved(sp.slab_term, prior, spec) if prior.p < 1 else 0.0
    scale = _spike_resolved(sp.abs_curvature, prior, spec)
    # int p'' cancels to zero; its accuracy can only be judged against int |p''|
    curv = _spike_resolved(sp.curvature, prior, spec, abs_floor=spec.rel_tol * scale)
    return PriorInfoBreakdown(d1, d2, d3, d1 + d2 + d3, curv, scale)


def prior_info_direct(prior: BgPrior, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``int (p')^2/p dw`` evaluated from the score, without the three-way split."""
    return _spike_resolved(_SmoothedPrior(prior).fisher_integrand, prior, spec)


def coarse_grid_breakdown(prior: BgPrior, half_width: float = 10.0, points: int = 100_000) -> dict:
    """Trapezoid sums of the spike and cross terms on a uniform grid over ``+-half_width*sigma``.

    With the defaults the grid spacing (about 2e-4 sigma) is far wider than a
    1e-5 spike, so only the two nodes nearest zero see it. This is how
    vanishingly small spike-term values arise; the spike-resolved values are
    in :func:`prior_info_breakdown`. ``d2`` here is the single (undoubled)
    cross term.
    """
    sp = _SmoothedPrior(prior)
    w = np.linspace(-half_width * prior.sigma, half_width * prior.sigma, points)
    l1 = sp.log_a - w**2 / (2 * sp.s0**2)
    l2 = sp.log_b - w**2 / (2 * sp.s**2)
    ld = np.logaddexp(l1, l2)
    spike = w**2 / sp.s0**4 * np.exp(2 * l1 - ld)
    cross = w**2 / (sp.s0**2 * sp.s**2) * np.exp(l1 + l2 - ld)
    slab = w**2 / sp.s**4 * np.exp(2 * l2 - ld)
    return {
        "d1": float(np.trapezoid(spike, w)),
        "d2": float(np.trapezoid(cross, w)),
        "d3": float(np.trapezoid(slab, w)),
        "spacing": float(w[1] - w[0]),
    }


def _bg_batches(prior: BgPrior, m: int, samples: int, rng: np.random.Generator):
    rows = max(1, _CHUNK_ELEMENTS // m)
    done = 0
    while done < samples:
        k = min(rows, samples - done)
        active = rng.random((k, m)) >= prior.p
        yield np.where(active, prior.sigma * rng.standard_normal((k, m)), 0.0)
        done += k


def _mean_and_stderr(sums: list[float], sq_sums: list[float], n: int) -> tuple[float, float]:
    mean = math.fsum(sums) / n
    var = max(math.fsum(sq_sums) / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


def _check_mc(prior, sigma_e2, sigma_r2, m, samples):
    if samples < MIN_MC_SAMPLES:
        raise ParameterError(f"need at least {MIN_MC_SAMPLES} Monte Carlo samples, got {samples}")
    if not (sigma_e2 > 0 and sigma_r2 > 0):
        raise ParameterError("sigma_e2 and sigma_r2 must be positive")
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")


def mc_blind_jd(
    prior: BgPrior, sigma_e2: float, sigma_r2: float, m: int, samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo estimate of ``2 sigma_r^4 E[w_i^2 / (sigma_e^2 + sigma_r^2 |w|^2)^2]``.

    All coordinates share the same marginal, so ``w_i^2`` is replaced by the
    coordinate average ``|w|^2 / m``. Returns ``(estimate, standard_error)``.
    """
    _check_mc(prior, sigma_e2, sigma_r2, m, samples)
    sums, sq = [], []
    for w in _bg_batches(prior, m, samples, rng):
        r2 = np.einsum("ij,ij->i", w, w)
        v = 2.0 * sigma_r2**2 * (r2 / m) / (sigma_e2 + sigma_r2 * r2) ** 2
        sums.append(float(v.sum()))
        sq.append(float(v @ v))
    return _mean_and_stderr(sums, sq, samples)


def mc_a_integrals(
    prior: BgPrior, sigma_e2: float, sigma_r2: float, m: int, samples: int, rng: np.random.Generator
) -> dict:
    """Monte Carlo ``A1 = E[1/s(w)]`` and ``A2 = E[1/s(w)^2]`` with ``s = sigma_e^2 + sigma_r^2 |w|^2``."""
    _check_mc(prior, sigma_e2, sigma_r2, m, samples)
    s1, q1, s2, q2 = [], [], [], []
    for w in _bg_batches(prior, m, samples, rng):
        inv = 1.0 / (sigma_e2 + sigma_r2 * np.einsum("ij,ij->i", w, w))
        inv2 = inv * inv
        s1.append(float(inv.sum()))
        q1.append(float(inv @ inv))
        s2.append(float(inv2.sum()))
        q2.append(float(inv2 @ inv2))
    a1, se1 = _mean_and_stderr(s1, q1, samples)
    a2, se2 = _mean_and_stderr(s2, q2, samples)
    return {"a1": a1, "a1_se": se1, "a2": a2, "a2_se": se2}


def mc_offdiag_check(
    prior: BgPrior,
    sigma_e2: float,
    sigma_r2: float,
    m: int,
    samples: int,
    rng: np.random.Generator,
    i: int = 0,
    j: int = 1,
    antithetic: bool = False,
) -> tuple[float, float]:
    """Estimate of the off-diagonal data information ``J_D,ij`` (i != j).

    With ``antithetic`` each draw is paired with its mirror ``w_i -> -w_i``,
    under which the integrand flips sign exactly. Returns
    ``(estimate, standard_error)``.
    """
    _check_mc(prior, sigma_e2, sigma_r2, m, samples)
    if i == j or not (0 <= i < m and 0 <= j < m):
        raise ParameterError(f"need distinct indices in [0, {m}), got ({i}, {j})")
    sums, sq = [], []
    for w in _bg_batches(prior, m, samples, rng):
        r2 = np.einsum("ij,ij->i", w, w)
        den = (sigma_e2 + sigma_r2 * r2) ** 2
        v = 2.0 * sigma_r2**2 * w[:, i] * w[:, j] / den
        if antithetic:
            v = 0.5 * (v + 2.0 * sigma_r2**2 * (-w[:, i]) * w[:, j] / den)
        sums.append(float(v.sum()))
        sq.append(float(v @ v))
    return _mean_and_stderr(sums, sq, samples)
