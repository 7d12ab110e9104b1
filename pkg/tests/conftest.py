import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from egtplex.efg import BUILTIN_MATRICES, LeducConfig, build_leduc, sequence_form_of_matrix, to_sequence_form
from egtplex.treeplex import nine_simplex_treeplex

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def nine():
    return nine_simplex_treeplex()


@pytest.fixture(scope="session")
def leduc2_game():
    return build_leduc(LeducConfig(k=2))


@pytest.fixture(scope="session")
def leduc2(leduc2_game):
    return to_sequence_form(leduc2_game)


@pytest.fixture(scope="session")
def leduc3_game():
    return build_leduc(LeducConfig(k=3))


@pytest.fixture(scope="session")
def leduc3(leduc3_game):
    return to_sequence_form(leduc3_game)


@pytest.fixture(scope="session")
def rps():
    return sequence_form_of_matrix(BUILTIN_MATRICES["rps"])


@pytest.fixture(scope="session")
def pennies():
    return sequence_form_of_matrix(BUILTIN_MATRICES["pennies"])


def interior_point(t, rng, floor=1e-6):
    """Random interior point with every entry at least ``floor``."""
    while True:
        q = t.sequence_from_behavioral(t.random_behavioral(rng, 1.0))
        if q.min() >= floor:
            return q


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
