import numpy as np
import pytest

from skinpontus.model import ChainParams

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def symmetric_chain():
    return ChainParams(L=11, J=1.0, eps=0.0, J_R=1.0, J_L=1.0)


@pytest.fixture
def skin_chain():
    return ChainParams(L=11, J=1.0, eps=0.0, J_R=1.0, J_L=0.5)


def random_density_matrix(rng, L):
    X = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
    rho = X @ X.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, L):
    X = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
    return X + X.conj().T


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
