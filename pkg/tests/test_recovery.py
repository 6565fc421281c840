import numpy as np
import pytest

from bcrbcs.errors import InfeasibleError, ParameterError, RankDeficientError, ShapeError
from bcrbcs.recovery import (
    SOLVERS, RecoveryOutput, SolverConfig, bp_l1, get_solver, least_squares, omp, register_solver, sl0,
)


def sparse_problem(seed, m=128, n=64, k=5):
    rng = np.random.default_rng(seed)
    w = np.zeros(m)
    w[rng.choice(m, size=k, replace=False)] = rng.standard_normal(k)
    d = rng.standard_normal((n, m))
    return d, d @ w, w


def test_solver_config_validation():
    for kw in ({"omp_iters": 0}, {"sl0_decrease": 1.0}, {"sl0_decrease": 0.0}, {"sl0_sigma_min": 0.0},
               {"sl0_inner_iters": 0}, {"sl0_step": -1.0}, {"bp_tol": 0.0}, {"bp_max_iters": 0}):
        with pytest.raises(ParameterError):
            SolverConfig(**kw)


def test_least_squares():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((10, 3))
    c = np.array([1.0, -2.0, 0.5])
    assert np.allclose(least_squares(a, a @ c), c, atol=1e-13)
    dup = np.column_stack([a, a[:, 0]])
    with pytest.raises(RankDeficientError) as info:
        least_squares(dup, a @ c)
    assert info.value.rank == 3
    with pytest.raises(ShapeError):
        least_squares(rng.standard_normal((2, 3)), np.ones(2))


@pytest.mark.parametrize("seed", range(5))
def test_omp_invariants(seed):
    d, y, w = sparse_problem(seed, k=8)
    cfg = SolverConfig(omp_iters=12)
    out = omp(d, y, cfg)
    history = out.diagnostics["residual_history"]
    assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))
    assert len(out.support) <= cfg.omp_iters
    off = np.ones(d.shape[1], dtype=bool)
    off[list(out.support)] = False
    assert np.all(out.w_hat[off] == 0.0)
    # residual orthogonal to every selected atom after each iteration
    for k in range(1, out.iterations + 1):
        part = omp(d, y, SolverConfig(omp_iters=k))
        r = y - d @ part.w_hat
        for j in part.support:
            assert abs(r @ d[:, j]) <= 1e-10 * np.linalg.norm(d[:, j]) * np.linalg.norm(y)


def test_omp_exact_recovery_and_early_stop():
    d, y, w = sparse_problem(1)
    out = omp(d, y, SolverConfig(omp_iters=50))
    assert np.allclose(out.w_hat, w, atol=1e-10)
    assert out.iterations == 5
    assert out.residual_norm <= 1e-12 * np.linalg.norm(y)


def test_omp_ties_pick_lowest_index():
    d = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    out = omp(d, np.array([1.0, 0.0]), SolverConfig(omp_iters=1))
    assert out.support == (0,)


def test_omp_stops_on_rank_deficiency():
    d = np.array([[1.0, 0.0, 1.0, 1.0], [0.0, 1.0, 1.0, -1.0]])
    out = omp(d, np.array([3.0, 1.0]), SolverConfig(omp_iters=4))
    assert len(out.support) <= 2
    assert out.residual_norm <= 1e-12


def test_sl0_feasibility_and_recovery():
    d, y, w = sparse_problem(2)
    out = sl0(d, y, SolverConfig(sl0_sigma_min=1e-5))
    assert out.residual_norm <= 1e-8 * np.linalg.norm(y)
    assert np.linalg.norm(out.w_hat - w) <= 1e-4 * np.linalg.norm(w)
    surrogate = out.diagnostics["surrogate"]
    sigmas = [s for s, _ in surrogate]
    assert all(b < a for a, b in zip(sigmas, sigmas[1:]))


def test_sl0_projection_is_exact_every_step(monkeypatch):
    from bcrbcs import recovery

    d, y, _ = sparse_problem(3)
    seen = []
    original = recovery._Projector.project

    def spy(self, w, y_):
        out = original(self, w, y_)
        seen.append(np.linalg.norm(y_ - self.d @ out) / np.linalg.norm(y_))
        return out

    monkeypatch.setattr(recovery._Projector, "project", spy)
    sl0(d, y)
    assert seen and max(seen) <= 1e-8


def test_sl0_requires_wide_full_rank():
    with pytest.raises(ShapeError):
        sl0(np.ones((3, 2)), np.ones(3))
    with pytest.raises(RankDeficientError):
        sl0(np.ones((2, 4)), np.ones(2))


def test_bp_recovery():
    d, y, w = sparse_problem(4)
    out = bp_l1(d, y)
    assert out.converged
    assert np.allclose(out.w_hat, w, atol=1e-9)
    assert out.residual_norm <= 1e-10


def test_bp_infeasible():
    with pytest.raises(InfeasibleError):
        bp_l1(np.zeros((2, 3)), np.array([1.0, 0.0]))


def test_registry():
    assert set(SOLVERS) >= {"omp", "sl0", "bp"}
    with pytest.raises(ParameterError):
        get_solver("lasso")
    with pytest.raises(ParameterError):
        register_solver("a,b", omp)

    def zero(d, y, cfg):
        return RecoveryOutput(np.zeros(d.shape[1]), 0, float(np.linalg.norm(y)))

    register_solver("zero_test", zero)
    try:
        assert get_solver("zero_test") is zero
    finally:
        SOLVERS.pop("zero_test")


def test_shape_checks():
    for fn in (omp, sl0, bp_l1):
        with pytest.raises(ShapeError):
            fn(np.ones((3, 5)), np.ones(4))
