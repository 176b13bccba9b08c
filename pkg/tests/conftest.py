import numpy as np
import pytest

from wpcvqc import qma, qsim


@pytest.fixture
def rng():
    return qsim.make_rng(20240817)


@pytest.fixture
def diag4():
    return qma.diagonal_verifier([1.0, 0.75, 0.25, 0.0])


def random_state(dim, rng, layout=None):
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return qsim.StateVector(z / np.linalg.norm(z), layout or [("w", dim)])


def stderr(p, n):
    return np.sqrt(max(p * (1.0 - p), 1.0 / n) / n)
