import numpy as np
import pytest

from mmpower import InterferenceNetwork, PowerModel


def random_network(rng, n=2, bandwidth=1.0, sigma2=1.0):
    """O(1)-scale random interference network for solver/oracle tests."""
    alpha = 10.0 ** rng.uniform(-0.3, 0.7, n)
    beta = 10.0 ** rng.uniform(-1.5, 0.0, (n, n))
    np.fill_diagonal(beta, 0.0)
    return InterferenceNetwork(
        alpha=alpha, beta=beta, sigma2=np.full(n, sigma2), bandwidth=bandwidth
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)


@pytest.fixture
def symmetric_net():
    """2-user symmetric strong-interference instance: alpha=1, beta=1, sigma2=1, B=1."""
    return InterferenceNetwork(
        alpha=[1.0, 1.0], beta=[[0.0, 1.0], [1.0, 0.0]], sigma2=[1.0, 1.0], bandwidth=1.0
    )


@pytest.fixture
def toy_power_model():
    return PowerModel(mu=[4.0, 4.0], p_static=1.6)
