import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def random_matrix(rng, n, p=None, rank=None):
    """Gaussian n x p matrix, optionally of prescribed rank."""
    p = n if p is None else p
    if rank is None:
        return rng.standard_normal((n, p))
    return rng.standard_normal((n, rank)) @ rng.standard_normal((rank, p))


def random_projector(rng, n, rank):
    """Oblique idempotent of the given rank."""
    if rank == 0:
        return np.zeros((n, n))
    X = rng.standard_normal((n, rank))
    Y = rng.standard_normal((n, rank))
    return X @ np.linalg.solve(Y.T @ X, Y.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
