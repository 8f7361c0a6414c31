import numpy as np
import pytest

from slowfast import cusp_canonical, fold_canonical


@pytest.fixture
def fold():
    return fold_canonical()


@pytest.fixture
def cusp():
    return cusp_canonical()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
