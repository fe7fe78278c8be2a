import numpy as np
import pytest

from adeqmc import adequacy, scenario
from adeqmc.rng import stream
from adeqmc.system import System


@pytest.fixture(scope="session")
def small_profiles():
    return scenario.synth_profiles(3, 2, stream(11, "profiles"))


@pytest.fixture(scope="session")
def small_system(small_profiles):
    thermal = scenario.ThermalFleet(capacities=[100.0] * 12, availability=0.9)
    storage = adequacy.StorageFleet(
        units=[adequacy.StorageUnit(10.0, 20.0) for _ in range(27)]
    )
    return System(thermal=thermal, storage=storage, profiles=small_profiles)
