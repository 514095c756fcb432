import numpy as np
import pytest

from gatespeed.model import DeviceSpec, default_device, mhz_to_rad_ns


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def paper_device():
    """The experimental chip: Ising g = 2pi x 1.75 MHz, r1 = 1.1, r2 = 0.7."""
    return default_device()


@pytest.fixture(scope="session")
def symmetric_device():
    """Same coupling without drive distortion (r1 = r2 = 1), bound 3g."""
    g = mhz_to_rad_ns(1.75)
    return DeviceSpec(interaction="ising", g=g, r1=1.0, r2=1.0, omega_max=3 * g)
