import numpy as np
import pytest
from hypothesis import given

from conftest import finite, states
from xphase.core import (
    Constants,
    ExtendedState,
    StateError,
    Tangent8,
    canonical_coords,
    extended_hamiltonian,
    state_from_canonical,
)


def test_origin_maps_to_zero():
    s = ExtendedState(q=np.zeros(3), p=np.zeros(3))
    assert np.array_equal(canonical_coords(s, Constants()), np.zeros(8))


def test_time_energy_slots():
    s = ExtendedState(q=np.zeros(3), p=np.zeros(3), t=2.0, E=3.0)
    x = canonical_coords(s, Constants(c=1.0))
    assert x[3] == 2.0 and x[7] == -3.0


def test_time_energy_slots_with_c3():
    s = ExtendedState(q=np.zeros(3), p=np.zeros(3), t=1.0, E=6.0)
    x = canonical_coords(s, Constants(c=3.0))
    assert x[3] == 3.0 and x[7] == -2.0
    assert s.q0(Constants(c=3.0)) == 3.0 and s.p0(Constants(c=3.0)) == -2.0


@given(states(), finite.filter(lambda v: abs(v) > 0.1).map(abs))
def test_canonical_roundtrip_within_one_ulp(s, c):
    k = Constants(c=c)
    back = state_from_canonical(canonical_coords(s, k), k)
    for a, b in ((s.t, back.t), (s.E, back.E)):
        assert abs(a - b) <= np.spacing(max(abs(a), 1e-300))
    assert np.array_equal(back.q, s.q) and np.array_equal(back.p, s.p)


@given(states(), finite)
def test_extended_hamiltonian_is_h_minus_e(s, h):
    assert extended_hamiltonian(h, s, Constants()) == pytest.approx(h - s.E, abs=1e-15)


@pytest.mark.parametrize("kw", [dict(c=0.0), dict(c=-1.0), dict(alpha=2), dict(alpha=0), dict(e=float("nan"))])
def test_constants_rejects(kw):
    with pytest.raises(StateError):
        Constants(**kw)


@pytest.mark.parametrize(
    "kw",
    [
        dict(q=[0, 0], p=[0, 0, 0]),
        dict(q=[0, 0, np.inf], p=[0, 0, 0]),
        dict(q=[0, 0, 0], p=[0, 0, 0], t=np.nan),
        dict(q=[0, 0, 0], p=[0, 0, 0], E=-np.inf),
    ],
)
def test_state_rejects_bad_input(kw):
    with pytest.raises(StateError):
        ExtendedState(**kw)


def test_state_is_immutable():
    s = ExtendedState(q=[1, 2, 3], p=[0, 0, 0])
    with pytest.raises(ValueError):
        s.q[0] = 5.0
    with pytest.raises(AttributeError):
        s.t = 1.0
    s2 = s.replace(t=4.0)
    assert s2.t == 4.0 and s.t == 0.0


def test_physical_array_order():
    s = ExtendedState(q=[1, 2, 3], p=[4, 5, 6], t=7, E=8)
    assert s.as_array().tolist() == [1, 2, 3, 7, 4, 5, 6, 8]
    assert np.array_equal(ExtendedState.from_array(s.as_array()).as_array(), s.as_array())


def test_tangent_canonical_components():
    v = Tangent8(dq=[1, 0, 0], dp=[0, 2, 0], dt=1.0, dE=4.0)
    x = v.canonical(Constants(c=2.0))
    assert x.tolist() == [1, 0, 0, 2, 0, 2, 0, -2]
    with pytest.raises(StateError):
        Tangent8(dq=[0, 0, 0], dp=[0, 0, 0], dE=np.nan)
