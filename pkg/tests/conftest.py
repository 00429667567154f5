import numpy as np
import pytest

from optomech_sim.fock import CompositeSpace, DensityMatrix, TruncatedSpace


def random_density(space, seed=0, rank=None):
    """Full-rank (or given-rank) random density matrix on ``space``."""
    rng = np.random.default_rng(seed)
    d = space.dim
    k = rank or d
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return DensityMatrix(space, rho / np.trace(rho).real)


@pytest.fixture
def pair_space():
    return CompositeSpace.of(TruncatedSpace(4, "cavity"), TruncatedSpace(3, "mech"))
