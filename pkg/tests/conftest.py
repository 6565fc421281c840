import pytest

from bcrbcs.bench import DEFAULT_N_GRID, SweepConfig, default_workers, run_sweep
from bcrbcs.model import BgPrior, CsModel

ACCEPTANCE = pytest.StashKey[list]()

# one seed for the full-size sweep, shared by the acceptance and benchmark tests
SWEEP_SEED = 7


def reference_model(n: int = DEFAULT_N_GRID[0]) -> CsModel:
    return CsModel(512, n, BgPrior(0.9, 0.5))


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for the end-of-run summary."""
    lines = request.config.stash[ACCEPTANCE]

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def reference_sweep():
    """Full 100-trial sweep over the reference grid (a few minutes on one core)."""
    cfg = SweepConfig(reference_model(), DEFAULT_N_GRID, trials=100, master_seed=SWEEP_SEED)
    return run_sweep(cfg, workers=default_workers())
