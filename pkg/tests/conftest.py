import numpy as np
import pytest

from gspoisson.matroid import PartitionMatroid
from gspoisson.submodular import CoverageFunction


def make_cov3(weight_b=1.0):
    # items a=0, b=1; e1->{a}, e2->{b}, e3->{a,b}; elements e1,e2,e3 are 0,1,2
    return CoverageFunction([[0], [1], [0, 1]], [1.0, weight_b])


@pytest.fixture
def cov3():
    return make_cov3()


@pytest.fixture
def cov3w():
    return make_cov3(2.0)


@pytest.fixture
def cov3_partition():
    return PartitionMatroid([[0, 2], [1]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> "PASS criterion N: ..." line, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
