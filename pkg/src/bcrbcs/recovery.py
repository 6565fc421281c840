"""Sparse recovery: orthogonal matching pursuit, smoothed-l0 and basis pursuit.

Every solver has the signature ``solver(d, y, cfg) -> RecoveryOutput`` and is
deterministic in its inputs. Extra solvers can be added with
:func:`register_solver` and are then available to the benchmark by name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog

from .errors import InfeasibleError, ParameterError, RankDeficientError, ShapeError


@dataclass(frozen=True)
class SolverConfig:
    omp_iters: int = 50
    sl0_sigma_min: float = 1e-3
    sl0_decrease: float = 0.9
    sl0_inner_iters: int = 3
    sl0_step: float = 2.0
    bp_tol: float = 1e-6
    bp_max_iters: int = 100_000

    def __post_init__(self):
        if self.omp_iters < 1:
            raise ParameterError("omp_iters must be >= 1")
        if not 0.0 < self.sl0_decrease < 1.0:
            raise ParameterError("sl0_decrease must lie in (0, 1)")
        if not self.sl0_sigma_min > 0.0:
            raise ParameterError("sl0_sigma_min must be positive")
        if self.sl0_inner_iters < 1:
            raise ParameterError("sl0_inner_iters must be >= 1")
        if not self.sl0_step > 0.0:
            raise ParameterError("sl0_step must be positive")
        if not self.bp_tol > 0.0:
            raise ParameterError("bp_tol must be positive")
        if self.bp_max_iters < 1:
            raise ParameterError("bp_max_iters must be >= 1")


@dataclass
class RecoveryOutput:
    w_hat: np.ndarray
    iterations: int
    residual_norm: float
    support: tuple[int, ...] | None = None
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)


def _check_system(d, y) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.ndim != 2 or y.shape != (d.shape[0],):
        raise ShapeError(f"incompatible dictionary {d.shape} and measurements {y.shape}")
    return d, y


def _rank_tol(r: np.ndarray, shape: tuple[int, int]) -> float:
    diag = np.abs(np.diag(r))
    return max(shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)


def least_squares(columns, y) -> np.ndarray:
    """Coefficients minimizing ``|y - columns @ c|`` via pivoted QR.

    Raises :class:`RankDeficientError` (carrying the detected rank) when the
    columns are numerically dependent.
    """
    a, y = _check_system(columns, y)
    n, k = a.shape
    if k > n:
        raise ShapeError(f"more columns ({k}) than rows ({n})")
    if k == 0:
        return np.zeros(0)
    q, r, piv = sla.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.count_nonzero(diag > _rank_tol(r, a.shape)))
    if rank < k:
        raise RankDeficientError(f"columns have numerical rank {rank} < {k}", rank)
    z = sla.solve_triangular(r, q.T @ y)
    c = np.empty(k)
    c[piv] = z
    return c


def omp(d, y, cfg: SolverConfig = SolverConfig()) -> RecoveryOutput:
    """Orthogonal matching pursuit with normalized-correlation atom selection.

    Runs ``cfg.omp_iters`` iterations unless the residual drops below
    ``1e-12 |y|``. If a newly chosen atom makes the support rank deficient it
    is dropped and the iteration stops.
    """
    d, y = _check_system(d, y)
    n, m = d.shape
    norms = np.linalg.norm(d, axis=0)
    if np.any(norms == 0.0):
        raise ParameterError("dictionary has an all-zero column")
    y_norm = float(np.linalg.norm(y))
    stop = 1e-12 * y_norm
    support: list[int] = []
    coef = np.zeros(0)
    residual = y.copy()
    res_norm = y_norm
    history = [res_norm]
    chosen = np.zeros(m, dtype=bool)
    iters = 0
    rank_stop = False
    for _ in range(min(cfg.omp_iters, m)):
        if res_norm <= stop:
            break
        score = np.abs(d.T @ residual) / norms
        score[chosen] = -np.inf
        j = int(np.argmax(score))  # first maximum, so ties go to the lowest index
        try:
            new_coef = least_squares(d[:, support + [j]], y)
        except RankDeficientError:
            rank_stop = True
            break
        support.append(j)
        chosen[j] = True
        coef = new_coef
        residual = y - d[:, support] @ coef
        res_norm = float(np.linalg.norm(residual))
        history.append(res_norm)
        iters += 1
    w_hat = np.zeros(m)
    w_hat[support] = coef
    return RecoveryOutput(
        w_hat, iters, res_norm, tuple(support),
        diagnostics={"residual_history": history, "rank_stop": rank_stop},
    )


class _Projector:
    """Orthogonal projection onto the affine set ``{w : d w = y}``."""

    def __init__(self, d: np.ndarray):
        n, m = d.shape
        if n > m:
            raise ShapeError(f"dictionary must be square or wide, got {d.shape}")
        self.d = d
        self.q, self.r = sla.qr(d.T, mode="economic")
        diag = np.abs(np.diag(self.r))
        rank = int(np.count_nonzero(diag > _rank_tol(self.r, d.shape)))
        if rank < n:
            raise RankDeficientError(f"dictionary has row rank {rank} < {n}", rank)

    def pinv_apply(self, v: np.ndarray) -> np.ndarray:
        # d^+ v = Q R^{-T} v
        return self.q @ sla.solve_triangular(self.r, v, trans="T")

    def project(self, w: np.ndarray, y: np.ndarray) -> np.ndarray:
        return w - self.pinv_apply(self.d @ w - y)


def sl0(d, y, cfg: SolverConfig = SolverConfig()) -> RecoveryOutput:
    """Smoothed-l0 with exact feasibility.

    Starts from the minimum-norm solution, then for a geometrically shrinking
    ``sigma`` takes ``cfg.sl0_inner_iters`` steepest-ascent steps on
    ``sum exp(-w_i^2 / 2 sigma^2)`` with step ``cfg.sl0_step * sigma^2``, each
    followed by projection back onto ``d w = y``.
    """
    d, y = _check_system(d, y)
    proj = _Projector(d)
    w = proj.pinv_apply(y)
    sigma = 2.0 * float(np.max(np.abs(w))) if w.size else 0.0
    surrogate = []
    iters = 0
    while sigma > cfg.sl0_sigma_min:
        for _ in range(cfg.sl0_inner_iters):
            # step * sigma^2 times the gradient (w/sigma^2) exp(-w^2/2sigma^2)
            w = w - cfg.sl0_step * w * np.exp(-(w * w) / (2.0 * sigma * sigma))
            w = proj.project(w, y)
            iters += 1
        surrogate.append((sigma, float(np.sum(np.exp(-(w * w) / (2.0 * sigma * sigma))))))
        sigma *= cfg.sl0_decrease
    res = float(np.linalg.norm(y - d @ w))
    return RecoveryOutput(w, iters, res, diagnostics={"surrogate": surrogate})


def bp_l1(d, y, cfg: SolverConfig = SolverConfig()) -> RecoveryOutput:
    """Basis pursuit ``min |w|_1 s.t. d w = y`` as a linear program (HiGHS).

    The LP vertex is polished by re-solving the equalities on its support,
    which tightens feasibility to working precision.
    """
    d, y = _check_system(d, y)
    n, m = d.shape
    res = linprog(
        np.ones(2 * m),
        A_eq=np.hstack([d, -d]),
        b_eq=y,
        bounds=(0, None),
        method="highs",
        options={
            "maxiter": cfg.bp_max_iters,
            "primal_feasibility_tolerance": min(1e-7, cfg.bp_tol),
            "dual_feasibility_tolerance": min(1e-7, cfg.bp_tol),
        },
    )
    if res.status == 2:
        raise InfeasibleError("measurements are not in the range of the dictionary")
    if res.x is None:
        raise InfeasibleError(f"linear program failed: {res.message}")
    w = res.x[:m] - res.x[m:]
    converged = res.status == 0
    y_scale = 1.0 + float(np.linalg.norm(y))
    resid = float(np.linalg.norm(y - d @ w))

    support = np.flatnonzero(np.abs(w) > 1e-12 * max(1.0, float(np.max(np.abs(w), initial=0.0))))
    polished = False
    if 0 < support.size <= n:
        try:
            c = least_squares(d[:, support], y)
        except RankDeficientError:
            c = None
        if c is not None:
            cand = np.zeros(m)
            cand[support] = c
            cand_resid = float(np.linalg.norm(y - d @ cand))
            l1_slack = cfg.bp_tol * (1.0 + float(np.abs(w).sum()))
            if cand_resid <= resid and np.abs(cand).sum() <= np.abs(w).sum() + l1_slack:
                w, resid, polished = cand, cand_resid, True
    if resid > cfg.bp_tol * y_scale:
        converged = False
    return RecoveryOutput(
        w, int(getattr(res, "nit", 0)), resid, converged=converged,
        diagnostics={"status": int(res.status), "polished": polished},
    )


Solver = Callable[[np.ndarray, np.ndarray, SolverConfig], RecoveryOutput]

SOLVERS: dict[str, Solver] = {"omp": omp, "sl0": sl0, "bp": bp_l1}


def register_solver(name: str, fn: Solver) -> None:
    """Make ``fn`` available to sweeps under ``name``."""
    if not name or "," in name:
        raise ParameterError(f"invalid solver name {name!r}")
    SOLVERS[name] = fn


def get_solver(name: str) -> Solver:
    try:
        return SOLVERS[name]
    except KeyError:
        raise ParameterError(f"unknown solver {name!r}; known: {sorted(SOLVERS)}") from None
