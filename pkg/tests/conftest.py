import numpy as np
import pytest

from meanlab import Schedule, bernoulli_shift, geometric_schedule, sturmian
from meanlab.systems import GOLDEN, torus_rotation


@pytest.fixture(scope="session")
def small_sched():
    return geometric_schedule(32, 5)  # up to 512


@pytest.fixture(scope="session")
def mid_sched():
    return geometric_schedule(64, 7)  # up to 4096


@pytest.fixture(scope="session")
def rotation():
    return torus_rotation(GOLDEN)


@pytest.fixture(scope="session")
def bernoulli():
    return bernoulli_shift(0.5, horizon=8192)


@pytest.fixture(scope="session")
def sturmian_sys():
    return sturmian(GOLDEN, horizon=8192)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
