import numpy as np
import pytest

from ntcentral.core import Grid


@pytest.fixture
def unit_grid():
    return Grid(-1.0, 1.0, 40)


@pytest.fixture
def rng():
    return np.random.default_rng(871233)
