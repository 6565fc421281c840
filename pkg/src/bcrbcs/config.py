"""Run configuration: INI file with sections, overridden by command-line flags.

Precedence is flag > file > default. Unknown sections or keys are rejected,
and every effective value is echoed so result files describe themselves.

Example::

    [model]
    m = 512
    p = 0.9
    sigma = 0.5
    sigma_e2 = 1e-4

    [sweep]
    n_grid = 60, 80, 100, 120, 140, 160, 180, 200
    trials = 100
    seed = 7
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from .bench import DEFAULT_N_GRID, SweepConfig
from .errors import ConfigError, ParameterError
from .model import BgPrior, CsModel, Ensemble, EnsembleSpec
from .oracles import QuadratureSpec
from .recovery import SolverConfig, get_solver


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0 <= v <= 1


@dataclass
class RunConfig:
    m: int = 512
    p: float = 0.9
    sigma: float = 0.5
    sigma0: float = 1e-5
    sigma_r2: float = 1.0
    ensemble: str = "gaussian"
    sigma_e2: float = 1e-4
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    trials: int = 100
    seed: int = 0
    solvers: tuple[str, ...] = ("omp", "sl0", "bp")
    solver: SolverConfig = field(default_factory=SolverConfig)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def model(self) -> CsModel:
        prior = BgPrior(self.p, self.sigma, self.sigma0)
        return CsModel(self.m, self.n_grid[0], prior, EnsembleSpec(self.ensemble, self.sigma_r2), self.sigma_e2)

    def sweep(self) -> SweepConfig:
        return SweepConfig(self.model(), self.n_grid, self.trials, self.seed, self.solvers, self.solver)

    def echo(self) -> list[str]:
        """``section.key = value`` lines for every effective setting."""
        lines = []
        for section, keys in _SCHEMA.items():
            for key in keys:
                lines.append(f"{section}.{key} = {_format(self._get(section, key))}")
        return lines

    def _get(self, section, key):
        if section == "solver":
            return getattr(self.solver, key)
        if section == "quadrature":
            return getattr(self.quadrature, key)
        return getattr(self, key)


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(" ", "").split(",") if t)


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


_TYPES = {"int": int, "float": float}

# section -> key -> (parser, validator or None, description of the domain)
_SCHEMA = {
    "model": {
        "m": (int, lambda v: v >= 1, "an integer >= 1"),
        "p": (float, _unit, "a probability in [0, 1]"),
        "sigma": (float, _positive, "positive"),
        "sigma0": (float, _positive, "positive"),
        "sigma_r2": (float, _positive, "positive"),
        "ensemble": (str, lambda v: v in {e.value for e in Ensemble}, "gaussian or bernoulli"),
        "sigma_e2": (float, _nonneg, "non-negative"),
    },
    "sweep": {
        "n_grid": (_int_list, lambda v: bool(v) and v[0] >= 1
                   and all(b > a for a, b in zip(v, v[1:])), "strictly increasing integers >= 1"),
        "trials": (int, lambda v: v >= 1, "an integer >= 1"),
        "seed": (int, _nonneg, "a non-negative integer"),
        "solvers": (_str_list, bool, "a comma-separated list of solver names"),
    },
    # field validation for these two lives in SolverConfig / QuadratureSpec
    "solver": {f.name: (_TYPES[f.type], None, "") for f in dataclasses.fields(SolverConfig)},
    "quadrature": {f.name: (_TYPES[f.type], None, "") for f in dataclasses.fields(QuadratureSpec)},
}


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return lineno
        elif key is not None and current == section:
            name = line.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return lineno
    return None


def _where(path, text, section, key=None) -> str:
    line = _line_of(text, section, key) if text is not None else None
    loc = f"{path}:{line}: " if (path and line) else (f"{path}: " if path else "")
    return loc


def _coerce(section, key, raw, path=None, text=None):
    parser, check, domain = _SCHEMA[section][key]
    try:
        value = parser(raw) if isinstance(raw, str) else raw
    except (TypeError, ValueError):
        raise ConfigError(f"{_where(path, text, section, key)}{section}.{key}: cannot parse {raw!r}") from None
    if check is not None and not check(value):
        raise ConfigError(f"{_where(path, text, section, key)}{section}.{key} must be {domain}, got {raw!r}")
    return value


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from an optional INI file and ``section.key`` overrides."""
    values: dict[tuple[str, str], object] = {}
    text = None
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in cp.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"{_where(path, text, section)}unknown section [{section}]")
            for key, raw in cp.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"{_where(path, text, section, key)}unknown key {section}.{key}")
                values[(section, key)] = _coerce(section, key, raw, path, text)
    for dotted, raw in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        values[(section, key)] = _coerce(section, key, raw)

    top = {k: v for (s, k), v in values.items() if s in ("model", "sweep")}
    solver_kw = {k: v for (s, k), v in values.items() if s == "solver"}
    quad_kw = {k: v for (s, k), v in values.items() if s == "quadrature"}
    try:
        cfg = RunConfig(**top, solver=SolverConfig(**solver_kw), quadrature=QuadratureSpec(**quad_kw))
        for name in cfg.solvers:
            get_solver(name)
        cfg.model()
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    return cfg
