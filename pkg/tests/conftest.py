import numpy as np
import pytest

from fluxtube.lattice import centered_lattice


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small2():
    return centered_lattice(12, 12, 2)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
