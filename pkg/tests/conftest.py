import numpy as np
import pytest

from nspd.spectral import Grid


@pytest.fixture(scope="session")
def grid2d() -> Grid:
    return Grid(dim=2, n=32)


@pytest.fixture(scope="session")
def grid3d() -> Grid:
    return Grid(dim=3, n=16)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
