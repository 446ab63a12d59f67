import numpy as np
import pytest

from slowswitch.constants import default_constants
from slowswitch.photometry import Geometry


@pytest.fixture(scope="session")
def constants():
    return default_constants()


@pytest.fixture(scope="session")
def g13(constants):
    return constants.gamma13


@pytest.fixture(scope="session")
def geom(constants):
    return Geometry.from_constants(constants)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
