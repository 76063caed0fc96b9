import numpy as np
import pytest

from curvlab.curvature import MetricChart
from curvlab.expr import Coord, Sin
from curvlab.suite import SuiteConfig, run_suite

_SUITE_KEY = pytest.StashKey[list]()


@pytest.fixture
def sphere():
    """Round unit 2-sphere in (theta, phi): K = 1."""
    return MetricChart(2, {(0, 0): 1.0, (1, 1): Sin(Coord(0)) ** 2}, name="sphere")


@pytest.fixture
def hyperbolic():
    """Upper half plane dx^2 + dy^2 over y^2: K = -1."""
    y = Coord(1)
    return MetricChart(2, {(0, 0): 1 / y ** 2, (1, 1): 1 / y ** 2}, name="h2")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def suite_results(request):
    """The acceptance suite, run once per session."""
    results = run_suite(SuiteConfig())
    request.config.stash[_SUITE_KEY] = results
    return {r.key: r for r in results}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_SUITE_KEY, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {r.number} ({r.key}): {r.title}")
        for c in r.checks:
            if not c.passed:
                terminalreporter.write_line(
                    f"      {c.name}: value {c.value:.3e} vs bound {c.bound:.1e} {c.detail}".rstrip())
