"""Shared fixtures: one RNG per test and the three standard backends."""

import numpy as np
import pytest

from l2torsion.harness import standard_backends


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["Matrix", "FiniteGroup", "Family"])
def backend(request):
    return standard_backends()[request.param]


@pytest.fixture
def backends():
    return standard_backends()
