import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rqtraj.errors import InvalidConstants
from rqtraj.model import (
    Microstate,
    ParticleSpec,
    Potential,
    Region,
    UnitSystem,
    classify_region,
    energy_gap,
    kinetic_energy,
)

finite = st.floats(-10, 10, allow_nan=False)


def test_units_default_natural():
    u = UnitSystem()
    assert (u.hbar, u.c) == (1.0, 1.0)


@pytest.mark.parametrize("hbar,c", [(0, 1), (1, 0), (-1, 1), (math.inf, 1), (1, math.nan)])
def test_units_reject_nonpositive(hbar, c):
    with pytest.raises(ValueError):
        UnitSystem(hbar, c)


def test_units_scaled():
    assert UnitSystem(2, 3).scaled(0.5, 2) == UnitSystem(1, 6)


@pytest.mark.parametrize("m0,E", [(-1, 1), (1, 0), (1, -2), (math.nan, 1)])
def test_particle_rejects_bad_values(m0, E):
    with pytest.raises(ValueError):
        ParticleSpec(m0, E)


def test_photon_flag_and_rest_energy():
    assert ParticleSpec(0, 2).is_photon
    assert ParticleSpec(2, 5).rest_energy(UnitSystem(c=3)) == 18


def test_microstate_a_zero_rejected():
    with pytest.raises(InvalidConstants):
        Microstate(0.0, 1.0)
    with pytest.raises(InvalidConstants):
        Microstate(1.0, math.inf)


def test_microstate_classical_and_replace():
    ms = Microstate()
    assert ms.is_classical
    ms2 = ms.replace(a=2.0, x0=1.0)
    assert (ms2.a, ms2.b, ms2.x0, ms2.t0) == (2.0, 0.0, 1.0, 0.0)
    assert not ms2.is_classical


def test_free_potential_is_zero():
    V, dV, d2V = Potential.free()(np.linspace(-3, 3, 7))
    assert not V.any() and not dV.any() and not d2V.any()
    assert Potential.free().is_free


def test_linear_and_constant_potentials():
    V, dV, d2V = Potential.linear(0.1, 2.0)(np.array([0.0, 1.0]))
    np.testing.assert_allclose(V, [2.0, 2.1])
    np.testing.assert_allclose(dV, [0.1, 0.1])
    assert not d2V.any()
    V, dV, _ = Potential.constant(0.2)(np.array([5.0]))
    assert V[0] == 0.2 and dV[0] == 0.0


def test_from_tag():
    assert Potential.from_tag("linear", ["0.5"]).params[0] == 0.5
    assert Potential.from_tag("free").is_free
    for tag, params in (("constant", ()), ("free", (1.0,)), ("quartic", ())):
        with pytest.raises(ValueError):
            Potential.from_tag(tag, params)


@pytest.mark.parametrize(
    "m0,E,expected",
    [(1, math.sqrt(2), Region.ALLOWED), (1, 0.8, Region.FORBIDDEN), (1, 1, Region.DEGENERATE)],
)
def test_classify_region_examples(m0, E, expected):
    assert classify_region(ParticleSpec(m0, E), Potential.free(), UnitSystem(), 0.0) is expected


@given(st.floats(0.1, 5), st.floats(0.01, 0.9))
def test_classify_region_flips_across_rest_energy(m0, frac):
    # (E - V) reflected across m0 c^2 flips the region
    u = UnitSystem()
    below = ParticleSpec(m0, m0 * (1 - frac))
    above = ParticleSpec(m0, m0 * (1 + frac))
    assert classify_region(below, Potential.free(), u, 0.0) is Region.FORBIDDEN
    assert classify_region(above, Potential.free(), u, 0.0) is Region.ALLOWED


def test_energy_gap_includes_potential():
    p = ParticleSpec(1, 3)
    assert energy_gap(p, Potential.constant(1), UnitSystem(), 0.0) == pytest.approx(3.0)


@pytest.mark.parametrize("m0,E,T", [(1, math.sqrt(2), math.sqrt(2) - 1), (0, 2, 2), (1, 1, 0)])
def test_kinetic_energy_examples(m0, E, T):
    assert kinetic_energy(ParticleSpec(m0, E), Potential.free(), UnitSystem(), 0.0) == pytest.approx(T, abs=1e-15)


@given(st.floats(0.1, 10), st.floats(0.1, 10), finite, st.floats(-5, 5))
def test_kinetic_energy_linear_in_E_and_V(E1, E2, slope, x):
    u = UnitSystem()
    pot = Potential.linear(slope)
    t1 = kinetic_energy(ParticleSpec(0.5, E1), pot, u, x)
    t2 = kinetic_energy(ParticleSpec(0.5, E2), pot, u, x)
    assert t2 - t1 == pytest.approx(E2 - E1, abs=1e-12)
    assert kinetic_energy(ParticleSpec(0.5, E1), Potential.free(), u, x) - t1 == pytest.approx(slope * x, abs=1e-12)
