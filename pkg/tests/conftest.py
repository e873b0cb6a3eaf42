import numpy as np
import pytest

from mpfair import ConcessionConfig, get_problem


@pytest.fixture(scope="session")
def case1():
    return get_problem("case1", density=150)


@pytest.fixture(scope="session")
def case2():
    return get_problem("case2", density=150)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def zero_threshold_config():
    return ConcessionConfig(gamma_hat=0.0)


def segment(a, b, n):
    t = np.linspace(0.0, 1.0, n)[:, None]
    return np.asarray(a, dtype=float) + t * (np.asarray(b, dtype=float) - np.asarray(a, dtype=float))
