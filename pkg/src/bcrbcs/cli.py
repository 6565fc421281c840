"""Command-line entry point: ``bcrbcs bound | verify | sweep``.

Exit codes: 0 success, 1 a verification check failed, 2 configuration error,
3 numerical failure. All output is CSV preceded by ``#`` lines echoing the
effective configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BLIND_CURVE, NONBLIND_CURVE, default_workers, run_sweep
from .bounds import (
    blind_a_coeffs, blind_bcrb, blind_data_info_diag, c1, c2, erfcx, nonblind_bcrb,
)
from .config import RunConfig, load_config
from .errors import ConfigError, ParameterError, QuadratureError
from .model import BgPrior, Ensemble
from .oracles import (
    QuadratureSpec, coarse_grid_breakdown, mc_a_integrals, mc_blind_jd, mc_offdiag_check,
    prior_info_breakdown, quad_c1, quad_c2,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

# Reference spike-term magnitudes at p=0.9, sigma=1, sigma0=1e-5.
REFERENCE_D1 = 4.7990e-25
REFERENCE_D2 = 2.7673e-19


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _header(command: str, cfg: RunConfig | None, extra: list[str] = ()) -> str:
    lines = [f"# bcrbcs {__version__} {command}"]
    if cfg is not None:
        lines += [f"# {line}" for line in cfg.echo()]
    lines += [f"# {line}" for line in extra]
    return "\n".join(lines) + "\n"


def _csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def bound_table(cfg: RunConfig) -> list[list[str]]:
    model = cfg.model()
    if model.sigma_e2 <= 0.0:
        raise ConfigError("model.sigma_e2 must be positive to evaluate the bounds")
    rows = [["n", "nonblind_bound_db", "blind_bound_db", "nonblind_per_coeff",
             "blind_per_coeff", "A1", "A2", "a", "regime"]]
    if model.ensemble.kind is Ensemble.GAUSSIAN:
        blind = blind_bcrb(model)
        co = blind.intermediates
        blind_cols = [blind.bound_db, blind.per_coeff_bound[0]]
        coeff_cols = [co.a1, co.a2, co.a]
        regime = blind.regime
    else:
        blind_cols = [math.nan, math.nan]
        coeff_cols = [math.nan] * 3
        regime = "not_applicable"
    for n in cfg.n_grid:
        nb = nonblind_bcrb(model.with_n(n))
        rows.append([str(n), fmt(nb.bound_db), fmt(blind_cols[0]), fmt(nb.per_coeff_bound[0]),
                     fmt(blind_cols[1]), *[fmt(v) for v in coeff_cols], regime])
    return rows


@dataclass
class Check:
    name: str
    computed: float
    expected: float
    tolerance: str
    status: str  # pass, fail or info

    def row(self) -> list[str]:
        return [self.name, fmt(self.computed), fmt(self.expected), self.tolerance, self.status]


def _rel_check(name, computed, expected, rel, info=False) -> Check:
    ok = abs(computed - expected) <= rel * abs(expected)
    status = "info" if info else ("pass" if ok else "fail")
    return Check(name, computed, expected, f"rel<={rel:g}", status)


def erfcx_oracle(a: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``(2/sqrt(pi)) int_0^inf exp(-2as - s^2) ds``, equal to ``exp(a^2) erfc(a)``."""
    from scipy import integrate

    upper = spec.truncation_radius
    val, _ = integrate.quad(lambda s: math.exp(-2 * a * s - s * s), 0.0, upper,
                            epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions)
    return 2.0 / math.sqrt(math.pi) * val


def verification_checks(spec: QuadratureSpec = QuadratureSpec(), seed: int = 0) -> list[Check]:
    checks: list[Check] = []
    for a in (0.0, 1.0, 50.0):
        checks.append(_rel_check(f"erfcx_a={a:g}", erfcx(a), erfcx_oracle(a, spec), 1e-12))
    grid = [1.0] + [float(a) for a in np.logspace(-2, 1, 20)]
    for name, closed, oracle in (("c1", c1, quad_c1), ("c2", c2, quad_c2)):
        for a in grid:
            checks.append(_rel_check(f"{name}_closed_vs_quad_a={a:.6g}", closed(a), oracle(a, spec), 1e-8))

    ref_prior = BgPrior(0.9, 1.0, 1e-5)
    resolved = prior_info_breakdown(ref_prior, spec)
    checks.append(_rel_check("D1_reference", resolved.d1, REFERENCE_D1, 0.01))
    checks.append(_rel_check("D2_reference", resolved.d2, REFERENCE_D2, 0.01))
    coarse = coarse_grid_breakdown(ref_prior)
    checks.append(_rel_check("D1_coarse_grid", coarse["d1"], REFERENCE_D1, 0.01, info=True))
    checks.append(_rel_check("D2_coarse_grid", coarse["d2"], REFERENCE_D2, 0.01, info=True))

    fig_prior = BgPrior(0.9, 0.5, 1e-5)
    fig = prior_info_breakdown(fig_prior, spec)
    checks.append(_rel_check("JP_smoothed_vs_bg_constant", fig.j_pii, 0.4, 1e-3))
    checks.append(_rel_check("JP_slab_term_vs_bg_constant", fig.d3, 0.4, 1e-3))
    gauss = prior_info_breakdown(BgPrior(0.0, 1.0, 1e-5), spec)
    checks.append(_rel_check("JP_gaussian_p0", gauss.j_pii, 1.0, 1e-9))
    for s0 in (1e-3, 1e-4, 1e-5):
        b = prior_info_breakdown(BgPrior(0.9, 0.5, s0), spec)
        checks.append(Check(f"JP_sigma0={s0:g}", b.j_pii, 0.4, "trend", "info"))
    ok = abs(fig.curvature_integral) <= 1e-9 * fig.curvature_scale
    checks.append(Check("second_derivative_integral", fig.curvature_integral, 0.0,
                        f"abs<={1e-9 * fig.curvature_scale:.3g}", "pass" if ok else "fail"))

    rng = np.random.default_rng(seed)
    reg = BgPrior(0.999, 0.5)
    closed = blind_data_info_diag(blind_a_coeffs(reg, 0.01, 1.0, 16), 1.0, 16)
    est, se = mc_blind_jd(reg, 0.01, 1.0, 16, 10**6, rng)
    checks.append(Check("blind_jd_mc_in_regime", closed, est, f"abs<={3 * se:.3g}",
                        "pass" if abs(closed - est) <= 3 * se else "fail"))
    mc = mc_a_integrals(reg, 0.01, 1.0, 16, 10**6, rng)
    checks.append(_rel_check("A1_mc_in_regime", blind_a_coeffs(reg, 0.01, 1.0, 16).a1, mc["a1"], 0.02))
    off, off_se = mc_offdiag_check(BgPrior(0.9, 0.5), 1e-4, 1.0, 8, 10**6, rng)
    checks.append(Check("offdiag_mc", off, 0.0, f"abs<={3 * off_se:.3g}",
                        "pass" if abs(off) <= 3 * off_se else "fail"))
    anti, _ = mc_offdiag_check(BgPrior(0.9, 0.5), 1e-4, 1.0, 8, 10**5, rng, antithetic=True)
    checks.append(Check("offdiag_antithetic", anti, 0.0, "abs<=0", "pass" if anti == 0.0 else "fail"))

    ref = BgPrior(0.9, 0.5)
    closed_p = blind_data_info_diag(blind_a_coeffs(ref, 1e-4, 1.0, 512), 1.0, 512)
    est_p, _ = mc_blind_jd(ref, 1e-4, 1.0, 512, 10**5, rng)
    checks.append(Check("blind_jd_reference_params", closed_p, est_p, "gap", "info"))
    return checks


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_bound(args) -> int:
    cfg = _config(args)
    _emit(_header("bound", cfg) + _csv(bound_table(cfg)), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    checks = verification_checks(cfg.quadrature, cfg.seed)
    rows = [["name", "computed", "expected", "tolerance", "status"]] + [c.row() for c in checks]
    failed = [c.name for c in checks if c.status == "fail"]
    summary = [f"checks: {len(checks)}, failed: {len(failed)}"] + [f"failed: {n}" for n in failed]
    _emit(_header("verify", cfg, summary) + _csv(rows), args.out)
    return EXIT_VERIFY if failed else EXIT_OK


def sweep_tables(cfg: RunConfig, workers: int) -> tuple[list[list[str]], str]:
    result = run_sweep(cfg.sweep(), workers=workers)
    long = [["n", "curve", "mse_db", "trials", "failures", "seed"]]
    for r in result.rows:
        long.append([str(r.n), r.curve, fmt(r.value_db), str(r.trials), str(r.failures), str(cfg.seed)])
    curves = list(cfg.solvers) + [NONBLIND_CURVE, BLIND_CURVE]
    wide = ["# n " + " ".join(curves)]
    for n in cfg.n_grid:
        wide.append(" ".join([str(n)] + [fmt(result.value(n, c)) for c in curves]))
    return long, "\n".join(wide) + "\n"


def cmd_sweep(args) -> int:
    cfg = _config(args)
    workers = args.workers if args.workers is not None else default_workers()
    long, wide = sweep_tables(cfg, workers)
    text = _header("sweep", cfg) + _csv(long)
    if args.gnuplot and args.out is None:
        # two blank lines start a new gnuplot data block
        text += "\n\n" + wide
    _emit(text, args.out)
    if args.gnuplot and args.out is not None:
        Path(args.out).with_suffix(".gnuplot.dat").write_text(_header("sweep", cfg) + wide, encoding="utf-8")
    return EXIT_OK


def _config(args) -> RunConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["sweep.seed"] = str(args.seed)
    if getattr(args, "trials", None) is not None:
        overrides["sweep.trials"] = str(args.trials)
    if getattr(args, "n_grid", None) is not None:
        overrides["sweep.n_grid"] = args.n_grid
    if getattr(args, "sigma_e2", None) is not None:
        overrides["model.sigma_e2"] = str(args.sigma_e2)
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bcrbcs", description="Bayesian Cramer-Rao bounds for noisy and blind compressed sensing.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--seed", type=int, help="master random seed")
        p.add_argument("--sigma-e2", type=float, help="noise variance")
        p.add_argument("--out", help="write CSV here instead of standard output")

    p = sub.add_parser("bound", help="tabulate both bounds over the n grid")
    common(p)
    p.add_argument("--n-grid", help="comma-separated measurement counts")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("verify", help="check closed forms against quadrature and Monte Carlo")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="Monte Carlo MSE of the recovery algorithms vs. n")
    common(p)
    p.add_argument("--trials", type=int, help="trials per grid point")
    p.add_argument("--n-grid", help="comma-separated measurement counts")
    p.add_argument("--workers", type=int, help="worker processes (default: $BCRBCS_WORKERS or CPU count)")
    p.add_argument("--gnuplot", action="store_true", help="also emit a wide table, one column per curve")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"bcrbcs: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterError as exc:
        print(f"bcrbcs: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"bcrbcs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
