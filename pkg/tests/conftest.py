import numpy as np
import pytest

from fbstab.geometry import bump_from_factor, make_profile
from fbstab.scenario import flat_critical, matched_critical


@pytest.fixture(scope="session")
def flat():
    return make_profile({"kind": "constant", "value": 1.0})


@pytest.fixture(scope="session")
def wavy():
    return make_profile({"kind": "cosine", "mean": 1.0, "amplitude": 0.1})


@pytest.fixture(scope="session")
def sym_bump():
    return bump_from_factor(-0.5, 0.5, (1.0,), amplitude=0.05)


@pytest.fixture(scope="session")
def asym_bump():
    return bump_from_factor(-0.6, 0.4, (1.0, 0.5), amplitude=0.05)


@pytest.fixture(scope="session")
def signed_bump():
    # (x-a)^4 (b-x)^4 (x-c), interior simple zero at c = -0.05
    return bump_from_factor(-0.6, 0.4, (0.05, 1.0), amplitude=0.2)


@pytest.fixture(scope="session")
def flat_scenario():
    return flat_critical()


@pytest.fixture(scope="session")
def flat_bumped(sym_bump):
    return flat_critical(bump=sym_bump)


@pytest.fixture(scope="session")
def curved_bumped(wavy, asym_bump):
    return matched_critical(wavy, bump=asym_bump)


def cos_mode(k):
    return lambda x: np.cos(k * np.pi * x)
