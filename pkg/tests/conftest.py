import numpy as np
import pytest

from kurasteer import CircleGrid, CouplingParams, Field, TimeGrid


@pytest.fixture
def grid():
    return CircleGrid(128)


@pytest.fixture
def coarse_grid():
    return CircleGrid(64)


@pytest.fixture
def params():
    return CouplingParams(alpha=0.0, D=0.25, K=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cosine_density(grid):
    """(1 + cos theta) / (2 pi): normalized, moments known in closed form."""
    return Field(grid, (1.0 + np.cos(grid.theta)) / (2.0 * np.pi))


@pytest.fixture
def unit_timegrid():
    return TimeGrid(1.0, 200)
