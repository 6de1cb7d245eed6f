import numpy as np
import pytest

from lievf.generators import circle_t2, composed_se3, screw_se3


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def circle360():
    return circle_t2(360)


@pytest.fixture(scope="session")
def screw_curve():
    return screw_se3(n_samples=1000, check_simple=False)


@pytest.fixture(scope="session")
def composed2000():
    return composed_se3(2000, check_simple=False)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
