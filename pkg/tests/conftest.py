import numpy as np
import pytest

from levyest import (GammaProcess, SpectralGrid, draw_uniform_gaps,
                     scheme_from_gaps)


@pytest.fixture(scope="session")
def gamma32():
    return GammaProcess(3.0, 2.0)


@pytest.fixture
def small_grid():
    return SpectralGrid.from_spacing(10.0, 0.05)


@pytest.fixture(scope="session")
def medium_scheme():
    return draw_uniform_gaps(2000, 6.0, rng_seed=11)


def homogeneous_scheme(n, delta):
    return scheme_from_gaps(np.full(n, float(delta)), delta)
