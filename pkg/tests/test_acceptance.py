"""Acceptance suite: one test per criterion, each printing a single pass/fail line.

Thresholds are applied exactly as stated; nothing is loosened to make a line
green. Run directly (``python tests/test_acceptance.py``) for the lines alone,
or through pytest, which repeats them in an "acceptance criteria" section.
"""

from __future__ import annotations

import contextlib
import io
import sys
import time
from pathlib import Path

import numpy as np

from bcrbcs import cli
from bcrbcs.bench import BLIND_CURVE, NONBLIND_CURVE, DEFAULT_N_GRID
from bcrbcs.bounds import blind_a_coeffs, blind_data_info_diag, c1, c2, nonblind_bcrb
from bcrbcs.model import BgPrior, CsModel, trial_rng
from bcrbcs.oracles import mc_blind_jd, prior_info_breakdown, quad_c1, quad_c2
from bcrbcs.recovery import SolverConfig, bp_l1, omp, sl0

SOLVERS = ("omp", "sl0", "bp")


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def criterion_1():
    """Spike-term magnitudes at p=0.9, sigma=1, sigma0=1e-5 from ``verify``."""
    checks, elapsed = _timed(cli.verification_checks)
    by_name = {c.name: c for c in checks}
    d1, d2 = abs(by_name["D1_reference"].computed), abs(by_name["D2_reference"].computed)
    ok_d1 = abs(d1 - cli.REFERENCE_D1) <= 0.01 * cli.REFERENCE_D1
    ok_d2 = abs(d2 - cli.REFERENCE_D2) <= 0.01 * cli.REFERENCE_D2
    ok = ok_d1 and ok_d2 and elapsed < 5.0
    detail = (f"|D1|={d1:.5g} (target {cli.REFERENCE_D1:.5g}), |D2|={d2:.5g} (target {cli.REFERENCE_D2:.5g}), "
              f"{elapsed:.2f}s")
    return ok, detail


def criterion_2():
    """Closed-form c1, c2 against adaptive quadrature on 20 log-spaced points."""
    def run():
        worst = 0.0
        for a in np.logspace(-2, 1, 20):
            a = float(a)
            worst = max(worst, abs(c1(a) - quad_c1(a)) / quad_c1(a), abs(c2(a) - quad_c2(a)) / quad_c2(a))
        return worst
    worst, elapsed = _timed(run)
    return worst <= 1e-8 and elapsed < 5.0, f"max rel err {worst:.3g}, {elapsed:.2f}s"


def criterion_3():
    """Quadrature prior information at p=0.9, sigma=0.5, sigma0=1e-5 against (1-p)/sigma^2."""
    bd, elapsed = _timed(lambda: prior_info_breakdown(BgPrior(0.9, 0.5, 1e-5)))
    target = (1 - 0.9) / 0.5**2
    rel = abs(bd.j_pii - target) / target
    ok = rel <= 1e-3 and elapsed < 5.0
    return ok, f"J_P={bd.j_pii:.6g} vs {target:g} (rel err {rel:.3g}), slab term {bd.d3:.6g}, {elapsed:.2f}s"


def criterion_4():
    """Blind data information closed form against 1e6-sample Monte Carlo, in regime."""
    prior = BgPrior(0.999, 0.5)

    def run():
        closed = blind_data_info_diag(blind_a_coeffs(prior, 0.01, 1.0, 16), 1.0, 16)
        est, se = mc_blind_jd(prior, 0.01, 1.0, 16, 10**6, np.random.default_rng(2024))
        return closed, est, se
    (closed, est, se), elapsed = _timed(run)
    z = abs(closed - est) / se
    return z <= 3.0 and elapsed < 30.0, f"closed {closed:.6g}, MC {est:.6g} +- {se:.2g} ({z:.2f} SE), {elapsed:.2f}s"


def criterion_5(result):
    """Shape of the MSE-versus-n curves from the full sweep."""
    n0, n1 = DEFAULT_N_GRID[0], DEFAULT_N_GRID[-1]
    drops = {s: result.value(n0, s) - result.value(n1, s) for s in SOLVERS}
    gaps60 = {s: result.value(n0, s) - result.value(n0, NONBLIND_CURVE) for s in SOLVERS}
    best = min(SOLVERS, key=lambda s: result.value(n1, s))
    dist200 = result.value(n1, best) - result.value(n1, NONBLIND_CURVE)
    above = [result.value(n, BLIND_CURVE) > result.value(n, NONBLIND_CURVE) for n in DEFAULT_N_GRID]
    parts = {
        "a": all(d >= 15.0 for d in drops.values()),
        "b": all(g >= 10.0 for g in gaps60.values()),
        "c": abs(dist200) <= 6.0,
        "d": all(above),
    }
    elapsed = result.metadata["elapsed_s"]
    ok = all(parts.values()) and elapsed < 15 * 60
    detail = (
        "(a) drops " + ", ".join(f"{s} {d:.1f}dB" for s, d in drops.items())
        + "; (b) n=60 gaps " + ", ".join(f"{s} {g:.1f}dB" for s, g in gaps60.items())
        + f"; (c) best at n=200 {best} {dist200:+.2f}dB from bound"
        + f"; (d) blind above at {sum(above)}/{len(above)} n"
        + f"; parts {''.join(k for k, v in parts.items() if v)} ok; {elapsed:.0f}s"
    )
    return ok, detail


def _k_sparse_trial(seed: int, m: int = 128, n: int = 64, k: int = 5):
    rng = trial_rng(seed, 0)
    w = np.zeros(m)
    support = rng.choice(m, size=k, replace=False)
    w[support] = rng.standard_normal(k)
    d = rng.standard_normal((n, m))
    return d, d @ w, w


def criterion_6():
    """Noiseless K=5, m=128, n=64 recovery: relative error <= 1e-4 in >= 95 of 100 trials."""
    cfg = SolverConfig(sl0_sigma_min=1e-5)
    solvers = {"omp": omp, "sl0": sl0, "bp": bp_l1}

    def run():
        hits = dict.fromkeys(solvers, 0)
        for seed in range(100):
            d, y, w = _k_sparse_trial(seed)
            for name, fn in solvers.items():
                rel = np.linalg.norm(fn(d, y, cfg).w_hat - w) / np.linalg.norm(w)
                hits[name] += bool(rel <= 1e-4)
        return hits
    hits, elapsed = _timed(run)
    ok = all(h >= 95 for h in hits.values()) and elapsed < 60.0
    return ok, ", ".join(f"{k} {v}/100" for k, v in hits.items()) + f", {elapsed:.1f}s"


def _sweep_csv(tmp: Path, name: str, workers: int) -> bytes:
    out = tmp / name
    code = cli.main(["sweep", "--seed", "11", "--trials", "6", "--n-grid", "60,120,200",
                     "--workers", str(workers), "--out", str(out)])
    if code != cli.EXIT_OK:
        raise RuntimeError(f"sweep exited with {code}")
    return out.read_bytes()


def criterion_7(tmp: Path):
    """Byte-identical sweep CSV across repeated runs and worker counts 1 and 4."""
    def run():
        return [_sweep_csv(tmp, f"run{i}_w{w}.csv", w) for i, w in enumerate((1, 1, 4))]
    outputs, elapsed = _timed(run)
    same_runs = outputs[0] == outputs[1]
    same_workers = outputs[0] == outputs[2]
    ok = same_runs and same_workers and elapsed < 120.0
    return ok, f"repeat identical: {same_runs}, workers 1 vs 4 identical: {same_workers}, {elapsed:.1f}s"


def criterion_8():
    """Monotonicity of the non-blind bound and non-negativity of A1 - sigma_e^2 A2."""
    def run():
        prior = BgPrior(0.9, 0.5)
        ns = np.linspace(20, 400, 10).astype(int)
        noise = np.logspace(-6, 0, 10)
        table = np.array([[nonblind_bcrb(CsModel(64, int(n), prior, sigma_e2=float(s))).per_coeff_bound[0]
                           for s in noise] for n in ns])
        dec_n = bool(np.all(np.diff(table, axis=0) < 0))
        inc_s = bool(np.all(np.diff(table, axis=1) > 0))
        gaps = []
        for m in (1, 4, 16, 64):
            for p in np.linspace(1 - 0.1 / m, 1 - 1e-4 / m, 5):
                for se2 in np.logspace(-6, 1, 8):
                    for sigma in (0.1, 0.5, 2.0):
                        co = blind_a_coeffs(BgPrior(float(p), sigma), float(se2), 1.0, m)
                        gaps.append(co.gap)
        return dec_n, inc_s, min(gaps), len(gaps)
    (dec_n, inc_s, min_gap, count), elapsed = _timed(run)
    ok = dec_n and inc_s and min_gap >= 0.0 and elapsed < 5.0
    return ok, (f"decreasing in n: {dec_n}, increasing in sigma_e^2: {inc_s}, "
                f"min gap {min_gap:.3g} over {count} points, {elapsed:.2f}s")


def test_criterion_1_spike_terms(acceptance):
    ok, detail = criterion_1()
    acceptance(1, ok, detail)
    assert ok, detail


def test_criterion_2_closed_forms_vs_quadrature(acceptance):
    ok, detail = criterion_2()
    acceptance(2, ok, detail)
    assert ok, detail


def test_criterion_3_prior_information(acceptance):
    ok, detail = criterion_3()
    acceptance(3, ok, detail)
    assert ok, detail


def test_criterion_4_blind_data_information_mc(acceptance):
    ok, detail = criterion_4()
    acceptance(4, ok, detail)
    assert ok, detail


def test_criterion_5_mse_curves(acceptance, reference_sweep):
    ok, detail = criterion_5(reference_sweep)
    acceptance(5, ok, detail)
    assert ok, detail


def test_criterion_6_noiseless_recovery(acceptance):
    ok, detail = criterion_6()
    acceptance(6, ok, detail)
    assert ok, detail


def test_criterion_7_sweep_determinism(acceptance, tmp_path):
    ok, detail = criterion_7(tmp_path)
    acceptance(7, ok, detail)
    assert ok, detail


def test_criterion_8_bound_monotonicity(acceptance):
    ok, detail = criterion_8()
    acceptance(8, ok, detail)
    assert ok, detail


def main() -> int:
    import tempfile

    sys.path.insert(0, str(Path(__file__).parent))
    from conftest import SWEEP_SEED, reference_model

    from bcrbcs.bench import SweepConfig, default_workers, run_sweep

    def sweep():
        return run_sweep(SweepConfig(reference_model(), DEFAULT_N_GRID, 100, SWEEP_SEED), default_workers())

    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        runs = [criterion_1, criterion_2, criterion_3, criterion_4, lambda: criterion_5(sweep()),
                criterion_6, lambda: criterion_7(Path(tmp)), criterion_8]
        for number, run in enumerate(runs, 1):
            with contextlib.redirect_stdout(io.StringIO()):
                ok, detail = run()
            failures += not ok
            print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
