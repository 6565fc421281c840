"""Seeded Monte Carlo sweep: recovery MSE against the Bayesian bounds over a grid of n.

Each trial draws its own ``(w, Phi, e)`` from ``trial_rng(master_seed, n, trial)``
and runs every solver on that same instance. Trials are independent, so they
can be farmed out to worker processes; results are keyed by trial index and
reduced in index order, which makes the output independent of worker count.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .bounds import blind_bcrb, nonblind_bcrb
from .errors import ParameterError
from .model import CsModel, Ensemble, measure, sample_matrix, sample_signal, trial_rng
from .recovery import SolverConfig, get_solver

WORKERS_ENV = "BCRBCS_WORKERS"
NONBLIND_CURVE = "bcrb_nonblind"
BLIND_CURVE = "bcrb_blind"
DEFAULT_N_GRID = (60, 80, 100, 120, 140, 160, 180, 200)


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            workers = int(value)
        except ValueError:
            raise ParameterError(f"{WORKERS_ENV} must be an integer, got {value!r}") from None
        if workers < 1:
            raise ParameterError(f"{WORKERS_ENV} must be >= 1, got {workers}")
        return workers
    return os.cpu_count() or 1


def mse_db(squared_errors) -> float:
    """``10 log10`` of the mean squared error; ``-inf`` when every error is zero."""
    errs = [float(e) for e in squared_errors]
    if not errs:
        raise ParameterError("mse_db needs at least one trial")
    if any(not e >= 0.0 for e in errs):
        raise ParameterError("squared errors must be non-negative")
    mean = math.fsum(errs) / len(errs)
    return 10.0 * math.log10(mean) if mean > 0.0 else -math.inf


@dataclass(frozen=True)
class SweepConfig:
    model: CsModel
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    trials: int = 100
    master_seed: int = 0
    solvers: tuple[str, ...] = ("omp", "sl0", "bp")
    solver_cfg: SolverConfig = field(default_factory=SolverConfig)
    retain_errors: bool = True

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid:
            raise ParameterError("n_grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ParameterError(f"n_grid must be strictly increasing, got {grid}")
        if grid[0] < 1:
            raise ParameterError("every grid point needs at least one measurement")
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        for name in self.solvers:
            get_solver(name)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "solvers", tuple(self.solvers))


def run_trial(
    model: CsModel,
    n: int,
    solvers,
    trial_seed,
    cfg: SolverConfig = SolverConfig(),
    phi: np.ndarray | None = None,
) -> dict[str, float]:
    """Squared error ``|w - w_hat|^2`` of every solver on one random instance.

    ``trial_seed`` is an int or a tuple of ints handed to
    :func:`~bcrbcs.model.trial_rng`. Draw order is fixed: ``w``, then ``Phi``
    (unless given), then noise. A solver that raises gets ``nan``.
    """
    key = tuple(trial_seed) if isinstance(trial_seed, (tuple, list)) else (trial_seed,)
    rng = trial_rng(*key)
    model = model.with_n(n)
    w = sample_signal(model.prior, model.m, rng)
    if phi is None:
        phi = sample_matrix(model.ensemble, n, model.m, rng)
    y, d = measure(model, phi, w, rng)
    out = {}
    for name in solvers:
        try:
            w_hat = get_solver(name)(d, y, cfg).w_hat
            err = w_hat - w
            out[name] = float(err @ err)
        except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError):
            out[name] = math.nan
    return out


@dataclass(frozen=True)
class SweepRow:
    n: int
    curve: str
    value_db: float
    trials: int
    failures: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    squared_errors: dict[tuple[int, str], np.ndarray]
    metadata: dict

    def value(self, n: int, curve: str) -> float:
        for row in self.rows:
            if row.n == n and row.curve == curve:
                return row.value_db
        raise KeyError((n, curve))

    def curve(self, name: str) -> list[tuple[int, float]]:
        return [(r.n, r.value_db) for r in self.rows if r.curve == name]


def _run_task(args):
    model, n, solvers, key, cfg = args
    with threadpool_limits(1):
        return run_trial(model, n, solvers, key, cfg)


def bound_curves(model: CsModel, n_grid) -> dict[tuple[int, str], float]:
    """Bound lines in dB of total squared error, ``10 log10(trace J^-1)``."""
    out = {}
    blind_db = math.nan
    if model.sigma_e2 > 0.0 and model.ensemble.kind is Ensemble.GAUSSIAN:
        blind_db = blind_bcrb(model).bound_db
    for n in n_grid:
        if model.sigma_e2 > 0.0:
            out[(n, NONBLIND_CURVE)] = nonblind_bcrb(model.with_n(n)).bound_db
        else:
            out[(n, NONBLIND_CURVE)] = math.nan
        out[(n, BLIND_CURVE)] = blind_db
    return out


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> SweepResult:
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    started = time.time()
    keys = [(n, t) for n in cfg.n_grid for t in range(cfg.trials)]
    tasks = [(cfg.model, n, cfg.solvers, (cfg.master_seed, n, t), cfg.solver_cfg) for n, t in keys]
    if workers == 1:
        results = [_run_task(task) for task in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=chunk))
    by_key = dict(zip(keys, results))

    bounds = bound_curves(cfg.model, cfg.n_grid)
    rows: list[SweepRow] = []
    errors: dict[tuple[int, str], np.ndarray] = {}
    failures_total = {}
    for n in cfg.n_grid:
        for name in cfg.solvers:
            errs = np.array([by_key[(n, t)][name] for t in range(cfg.trials)])
            ok = errs[np.isfinite(errs)]
            failed = int(errs.size - ok.size)
            value = mse_db(ok) if ok.size else math.nan
            rows.append(SweepRow(n, name, value, cfg.trials, failed))
            if cfg.retain_errors:
                errors[(n, name)] = errs
            if failed:
                failures_total[(n, name)] = failed
        for curve in (NONBLIND_CURVE, BLIND_CURVE):
            rows.append(SweepRow(n, curve, bounds[(n, curve)], 0, 0))
    metadata = {
        "master_seed": cfg.master_seed,
        "trials": cfg.trials,
        "n_grid": cfg.n_grid,
        "solvers": cfg.solvers,
        "failures": failures_total,
        "started": started,
        "elapsed_s": time.time() - started,
        "workers": workers,
    }
    return SweepResult(rows, errors, metadata)
