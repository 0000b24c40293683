"""Shared fixtures: the two reference systems used throughout the suite.

The k=4 system is the reference parameter set the frozen values were
measured at (eps_top=-2.8, nu=-0.9), the k=1 system is the smallest
nontrivial partner. Both are session scoped; building them is the
expensive part of the suite.
"""

import pytest

from susyosc import CSParams, SystemSpec, build_system


@pytest.fixture(scope="session")
def k4_spec():
    return SystemSpec(k=4, eps_top=-2.8, nu=-0.9)


@pytest.fixture(scope="session")
def k1_spec():
    return SystemSpec(k=1, eps_top=-1.0, nu=0.5)


@pytest.fixture(scope="session")
def k4_system(k4_spec):
    return build_system(k4_spec, n_max=32)


@pytest.fixture(scope="session")
def k1_system(k1_spec):
    return build_system(k1_spec, n_max=32)


@pytest.fixture(scope="session")
def k4_params(k4_spec):
    return CSParams.from_spec(k4_spec)


@pytest.fixture(scope="session")
def k1_params(k1_spec):
    return CSParams.from_spec(k1_spec)
