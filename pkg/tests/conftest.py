import numpy as np
import pytest

from opmeans.barycenters import WeightedEnsemble
from opmeans.hermitian import random_spd


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def spd_pair(rng):
    return random_spd(3, 10.0, rng), random_spd(3, 10.0, rng)


@pytest.fixture
def ensemble(rng):
    matrices = tuple(random_spd(3, 10.0, rng) for _ in range(3))
    return WeightedEnsemble(matrices, np.array([0.2, 0.3, 0.5]))


@pytest.fixture
def make_ensemble():
    def factory(seed: int, size: int = 3, dim: int = 3, condition: float = 10.0, complex_entries: bool = True):
        rng = np.random.default_rng(seed)
        matrices = tuple(random_spd(dim, condition, rng, complex_entries) for _ in range(size))
        return WeightedEnsemble(matrices, rng.dirichlet(np.ones(size)))

    return factory


@pytest.fixture(autouse=True)
def fixed_source_date(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
