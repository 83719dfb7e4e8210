import numpy as np
import pytest

from scl.fixtures import flat4, quartic4
from scl.induction import InducedSpace, sample_points


@pytest.fixture(scope="session")
def flat():
    return flat4()


@pytest.fixture(scope="session")
def quartic():
    return quartic4()


@pytest.fixture(scope="session", params=["flat4", "quartic4"])
def spec(request):
    return {"flat4": flat4, "quartic4": quartic4}[request.param]()


@pytest.fixture(scope="session")
def flat_space(flat):
    return InducedSpace(flat)


@pytest.fixture(scope="session")
def quartic_space(quartic):
    return InducedSpace(quartic)


@pytest.fixture(scope="session")
def P_points():
    return sample_points(2, 20, seed=0)


@pytest.fixture(scope="session")
def M_points(P_points):
    return P_points[:, :4]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
