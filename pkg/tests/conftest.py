import numpy as np
import pytest

from cramer_bridge.lp_bridge import LPInstance
from cramer_bridge.maxent_core import LPOrthant, MaxentProblem, SDPCone
from cramer_bridge.sdp_bridge import SDPInstance


@pytest.fixture
def e1():
    """A = [1, 1], c = (1, 2): two independent exponentials summed."""
    return MaxentProblem(LPOrthant([[1.0, 1.0]], [1.0, 2.0]), [1.0])


@pytest.fixture
def e1_inst():
    return LPInstance.from_arrays([[1.0, 1.0]], [1.0, 2.0], [1.0])


@pytest.fixture
def e2():
    """2x2 PSD cone with A0 = A1 = I, h(X) = tr X."""
    return MaxentProblem(SDPCone(np.eye(2), [np.eye(2)]), [3.0])


@pytest.fixture
def e2_inst():
    return SDPInstance.from_arrays(np.eye(2), [np.eye(2)], [3.0])


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = {}
    for mod in list(sys.modules.values()):
        if getattr(mod, "__name__", "").endswith("test_acceptance"):
            lines.update(getattr(mod, "RESULTS", {}))
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
