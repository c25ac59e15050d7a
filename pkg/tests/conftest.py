import numpy as np
import pytest

from sparselift import generate_instance, make_ensemble


@pytest.fixture
def small_ens():
    """d=16, m=16, n=80 Gaussian ensemble; roomy enough for exact recovery."""
    return make_ensemble(16, 16, 80, seed=0)


@pytest.fixture
def small_inst(small_ens):
    return generate_instance(small_ens, 2, 0.0, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
