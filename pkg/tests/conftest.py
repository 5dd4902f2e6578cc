"""Shared fixtures: one default-parameter steady solve reused across tests."""

import numpy as np
import pytest

from bimodal.hilbert import build_space
from bimodal.model import ModelParams, build_liouvillian
from bimodal.steady import steady_state


@pytest.fixture(scope="session")
def space6():
    return build_space(6, 6)


@pytest.fixture(scope="session")
def default_params():
    return ModelParams()


@pytest.fixture(scope="session")
def default_liouvillian(space6, default_params):
    return build_liouvillian(space6, default_params)


@pytest.fixture(scope="session")
def default_steady(default_liouvillian):
    return steady_state(default_liouvillian, tol=1e-10)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240815)


def random_density_matrix(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)
