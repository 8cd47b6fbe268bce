import numpy as np
import pytest

from carlteleport.dynamics import CarlParams, twin_state_vector
from carlteleport.fock import FockSpace


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def quantum_params():
    """g sqrt(N) / 2 omega_r = 0.05 on resonance of the a1-a3 pair process."""
    return CarlParams.from_ratio(0.05)


@pytest.fixture(scope="session")
def twin_s2():
    """Twin state with N1 = N3 = 1 (S = 2)."""
    return twin_state_vector(1.0, FockSpace((40, 40)))


def random_density(rng, dim, rank=None):
    rank = rank or dim
    m = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real
