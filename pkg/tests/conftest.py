import numpy as np
import pytest

from cgalp import _backend


@pytest.fixture(params=_backend.available())
def backend(request):
    """Run the test once per importable kernel backend."""
    with _backend.use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Long runs shared by the acceptance suite and the slower module tests.
# Each returns the run summary with in-memory traces and the wall time.

@pytest.fixture(scope="session")
def bench_dir(tmp_path_factory):
    return str(tmp_path_factory.mktemp("bench"))


def _timed(cfg):
    import time

    from cgalp.bench import run_experiment

    t0 = time.perf_counter()
    out = run_experiment(cfg)
    out["wall_time_s"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def projection_runs(bench_dir):
    from cgalp.bench import B_DEFAULT, ExperimentConfig

    runs = {}
    for a, b in [(0, 0.0), (0, B_DEFAULT), (1, B_DEFAULT)]:
        cfg = ExperimentConfig(experiment="projection", a=a, b=b, iters=100_000,
                               ref_iters=100_000, seed=0, out=bench_dir)
        runs[(a, b)] = _timed(cfg)
    return runs


@pytest.fixture(scope="session")
def matcomp_run(bench_dir):
    from cgalp.bench import ExperimentConfig

    cfg = ExperimentConfig(experiment="matcomp", N=32, density=0.8, a=0, b=0, delta=0.5,
                           rho=15.0, c=1.0, iters=10_000, ref_iters=100_000, seed=0,
                           out=bench_dir)
    return _timed(cfg)


ACCEPTANCE_LINES = pytest.StashKey[dict]()


@pytest.fixture
def acceptance_report(request):
    """``report(number, ok, detail)`` records one criterion outcome."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, {})

    def report(number, ok, detail):
        lines[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(lines[number])

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
