import numpy as np
import pytest
from hypothesis import settings

from symcost.core import pure_state
from symcost.group_rep import make_cyclic_rep

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

PLUS_AMPS = np.array([1.0, 1.0]) / np.sqrt(2)
SKEW_AMPS = np.sqrt([0.9, 0.1])


@pytest.fixture
def z2():
    return make_cyclic_rep(2, [0, 1])


@pytest.fixture
def plus():
    return pure_state(PLUS_AMPS)


@pytest.fixture
def skew():
    return pure_state(SKEW_AMPS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
