import numpy as np
import pytest

from eoflab.core import FactorLayout
from eoflab.solver import SolverConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


@pytest.fixture
def qubits():
    return FactorLayout.bipartite(2, 2)


@pytest.fixture
def fast_cfg():
    return SolverConfig(restarts=4)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
