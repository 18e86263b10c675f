import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fel.curves import FunctionalDataset, Grid
from fel.simulation import default_grid, simulate_dataset

settings.register_profile(
    "fel", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fel"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def sim_data():
    """Training set of 120 simulated curves plus 15 query curves."""
    gen = np.random.default_rng(5)
    ds, r = simulate_dataset(gen, default_grid(), 135, 0.5)
    return ds.subset(np.arange(120)), ds.subset(np.arange(120, 135)), r


@pytest.fixture
def line_grid():
    return Grid(np.array([0.0, 0.5, 1.0]))


def make_dataset(values, y=None, z=None, grid=None):
    values = np.asarray(values, dtype=float)
    grid = grid or Grid(np.linspace(0.0, 1.0, values.shape[1]))
    return FunctionalDataset(grid, values, y, z)
