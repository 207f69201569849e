import numpy as np
import pytest

import gmmsi
from gmmsi import presets


@pytest.fixture(scope="session")
def mixture():
    return presets.shared_subspace_mixture()


@pytest.fixture(scope="session")
def gauss_pair():
    return presets.coupled_gaussian_pair()


@pytest.fixture(scope="session")
def mixture_geo(mixture):
    return gmmsi.geometry_summary(mixture)


@pytest.fixture(scope="session")
def gauss_geo(gauss_pair):
    return gmmsi.geometry_summary(gauss_pair)


@pytest.fixture()
def nprng():
    return np.random.default_rng(1234)
