"""Shared fixtures and hypothesis profile for the test suite."""

import math

import pytest
from hypothesis import HealthCheck, settings

from skewloc import Frequency, kernel_from_profile

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@pytest.fixture(scope="session")
def golden():
    return Frequency(GOLDEN)


@pytest.fixture(scope="session")
def kernel_small():
    """Geometric hopping at the weak coupling used in most scans."""
    return kernel_from_profile(1.0, 1e-3)


@pytest.fixture(scope="session")
def kernel_mid():
    return kernel_from_profile(1.0, 1e-2)
