import numpy as np
import pytest

from toptrap.bloch import build_level_system, stretched_sigma_minus_detuning
from toptrap.fields import NonIdealities, PhysicalConstants, TrapConfig


@pytest.fixture(scope="session")
def consts():
    return PhysicalConstants()


@pytest.fixture(scope="session")
def paper_cfg():
    """Nominal operating point: B0 = 24 G, B1' = 30.7 G/cm, B2' = 2.5 G/cm."""
    return TrapConfig()


@pytest.fixture
def ideal_ni():
    return NonIdealities()


@pytest.fixture(scope="session")
def level_system():
    """13-state system at the polarimetry operating point."""
    return build_level_system(24.0, detuning=stretched_sigma_minus_detuning(24.0))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=1234))
