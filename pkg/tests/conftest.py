import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from xphase.core import Constants, ExtendedState

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)
vec3 = st.lists(finite, min_size=3, max_size=3).map(np.array)


@st.composite
def states(draw):
    return ExtendedState(q=draw(vec3), p=draw(vec3), t=draw(finite), E=draw(finite))


@pytest.fixture
def k():
    return Constants()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, scale=1.0):
    x = rng.uniform(-scale, scale, 8)
    return ExtendedState(q=x[0:3], p=x[4:7], t=x[3], E=x[7])
