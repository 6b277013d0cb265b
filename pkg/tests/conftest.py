import numpy as np
import pytest

from hcsparse.frame import ModularFrame


def micro_frame():
    """k = 1 frame {(1, 0), (0, 1), (1/sqrt2, 1/sqrt2)} in C^2."""
    r = 1 / np.sqrt(2)
    return ModularFrame(np.array([[1, 0], [0, 1], [r, r]], dtype=complex).reshape(3, 2, 1, 1))


def random_vector(rng, n, k):
    return (rng.standard_normal((n, k, k)) + 1j * rng.standard_normal((n, k, k))) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture
def micro():
    return micro_frame()
