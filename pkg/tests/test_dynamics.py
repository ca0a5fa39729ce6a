import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rqtraj.action import reduced_action
from rqtraj.analytic import free_trajectory_closed, node_lattice, quadrature_counterpart
from rqtraj.dynamics import (
    FlightMap,
    KinematicState,
    action_derivatives_from_kinematics,
    firqnl_residual,
    firqnl_terms,
    fiqnl_residual,
    kinematics_along,
    kinematics_nonrelativistic,
    node_guard_mask,
    time_of_flight,
    trajectory_by_quadrature,
    velocity_from_momentum,
)
from rqtraj.errors import DegenerateEnergy, DegeneratePath, SignChange, ZeroMomentum, ZeroVelocity
from rqtraj.kleingordon import TrigBasis, kg_basis_free_allowed, kg_basis_numeric
from rqtraj.model import Microstate, ParticleSpec, Potential, UnitSystem

FREE = Potential.free()
SQRT2 = math.sqrt(2)


@pytest.fixture
def allowed(massive, natural):
    return kg_basis_free_allowed(massive, natural)


@pytest.mark.parametrize(
    "m0,E,P,v",
    [(1, SQRT2, 1.0, 1 / SQRT2), (0, 2, 2.0, 1.0), (1, 0.8, -0.6, 0.75)],
)
def test_velocity_examples(m0, E, P, v, natural):
    assert velocity_from_momentum(P, ParticleSpec(m0, E), FREE, natural, 0.0) == pytest.approx(v)


def test_velocity_sign_rule(natural):
    assert velocity_from_momentum(-2.0, ParticleSpec(1, 2), FREE, natural, 0.0) < 0
    assert velocity_from_momentum(2.0, ParticleSpec(1, 0.5), FREE, natural, 0.0) < 0


def test_velocity_errors(natural):
    with pytest.raises(ZeroMomentum):
        velocity_from_momentum(0.0, ParticleSpec(1, 2), FREE, natural, 0.0)
    with pytest.raises(DegenerateEnergy):
        velocity_from_momentum(1.0, ParticleSpec(1, 1), FREE, natural, 0.0)


def test_time_of_flight_examples(allowed, massive, natural):
    assert time_of_flight(allowed, Microstate(), massive, FREE, natural, 0.0, 1.0) == pytest.approx(SQRT2, rel=1e-13)
    t = time_of_flight(allowed, Microstate(2, 0), massive, FREE, natural, 0.0, math.pi)
    assert t == pytest.approx(math.pi * SQRT2, rel=1e-12)
    assert t == pytest.approx(node_lattice(massive, natural).dt, rel=1e-12)
    assert time_of_flight(allowed, Microstate(2, 0), massive, FREE, natural, 0.4, 0.4) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.sampled_from([(2, 0), (0.5, 1), (3, -1)]))
def test_time_of_flight_additive(xa, xb, xc, ab):
    u, p = UnitSystem(), ParticleSpec(1, SQRT2)
    basis, ms = kg_basis_free_allowed(p, u), Microstate(*ab)
    tof = lambda a, b: time_of_flight(basis, ms, p, FREE, u, a, b)
    assert tof(xa, xb) + tof(xb, xc) == pytest.approx(tof(xa, xc), abs=1e-11)


def test_time_of_flight_degenerate_path(natural):
    p, pot = ParticleSpec(1, 1.5), Potential.linear(1.0)
    basis = kg_basis_numeric(p, pot, natural, (0.0, 1.0))
    with pytest.raises(DegeneratePath):
        time_of_flight(basis, Microstate(), p, pot, natural, 0.0, 0.9)


def test_time_of_flight_sign_change(natural):
    # photon with E - V crossing zero: velocity E-V/P flips sign
    p, pot = ParticleSpec(0, 1.0), Potential.linear(1.0)
    basis = kg_basis_numeric(p, pot, natural, (0.0, 2.1))
    with pytest.raises(SignChange):
        time_of_flight(basis, Microstate(), p, pot, natural, 0.0, 2.1)


def test_quadrature_classical_line(allowed, massive, natural):
    tr = trajectory_by_quadrature(allowed, Microstate(x0=0.3), massive, FREE, natural, (0, 5), 101)
    np.testing.assert_allclose(tr.x, tr.t / SQRT2 + 0.3, atol=1e-9)
    assert np.all(np.diff(tr.t) > 0)


def test_quadrature_matches_closed_form(massive, natural):
    ms = Microstate(2, 0)
    basis, qms = quadrature_counterpart(massive, ms, natural)
    lat = node_lattice(massive, natural, ms)
    span = (0.0, 3 * math.pi * SQRT2)
    nodes = lat.t(lat.indices_between(*span))
    tr = trajectory_by_quadrature(basis, qms, massive, FREE, natural, span, 400, nodes, 1e-6 * lat.dt)
    x_closed, n = free_trajectory_closed(massive, ms, natural, tr.t)
    assert np.max(np.abs(tr.x - x_closed)) <= 1e-7
    np.testing.assert_array_equal(tr.branch, n)
    assert tr.momentum_velocity_closure() <= 1e-8
    assert np.max(np.abs(tr.firqnl_residual)) / massive.E**4 <= 1e-8


def test_quadrature_photon_exact_line(photon, natural):
    basis = kg_basis_free_allowed(photon, natural)
    tr = trajectory_by_quadrature(basis, Microstate(x0=-1.0, t0=0.5), photon, FREE, natural, (-2, 3), 51)
    np.testing.assert_allclose(tr.x, tr.t - 0.5 - 1.0, atol=1e-12)


def test_quadrature_bad_span(allowed, massive, natural):
    with pytest.raises(ValueError):
        trajectory_by_quadrature(allowed, Microstate(), massive, FREE, natural, (1, 0), 10)
    with pytest.raises(ValueError):
        trajectory_by_quadrature(allowed, Microstate(), massive, FREE, natural, (0, 1), 1)


def test_guard_band_removes_samples():
    keep = node_guard_mask(np.array([0.0, 0.999, 1.0, 1.0000001, 2.0]), [1.0], 1e-6)
    np.testing.assert_array_equal(keep, [True, True, False, False, True])


def test_flight_map_backward_times(allowed, massive, natural):
    fm = FlightMap(allowed, Microstate(2, 0.5, 0.1, 1.0), massive, FREE, natural)
    ts = np.array([-3.0, 0.0, 1.0, 2.5])
    xs = fm.positions(ts)
    for t, x in zip(ts, xs):
        assert fm.time(x) == pytest.approx(t, abs=1e-11)
    assert xs[2] == 0.1


def test_kinematics_classical_uniform(allowed, massive, natural):
    kin = kinematics_along(allowed, Microstate(), massive, FREE, natural, np.linspace(-2, 2, 9))
    np.testing.assert_allclose(kin.v, 1 / SQRT2)
    np.testing.assert_allclose(kin.acc, 0, atol=1e-15)
    np.testing.assert_allclose(kin.jerk, 0, atol=1e-15)


def test_kinematics_photon(photon, natural):
    kin = kinematics_along(kg_basis_free_allowed(photon, natural), Microstate(), photon, FREE, natural, 0.7)
    assert kin.v == pytest.approx(1.0) and kin.acc == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("x", [0.0, 0.3])
def test_kinematics_fd_in_time(allowed, massive, natural, x):
    # acc = dv/dt and jerk = d acc/dt by central differences along x(t)
    ms = Microstate(2, 0, x0=x)
    fm = FlightMap(allowed, ms, massive, FREE, natural)
    h = 1e-4
    xs = fm.positions(np.array([-h, 0.0, h]))
    kin = kinematics_along(allowed, ms, massive, FREE, natural, xs)
    acc_fd = (kin.v[2] - kin.v[0]) / (2 * h)
    jerk_fd = (kin.acc[2] - kin.acc[0]) / (2 * h)
    scale = abs(kin.v[1]) ** 2  # acc ~ v^2 k
    assert abs(kin.acc[1] - acc_fd) <= 1e-5 * max(abs(kin.acc[1]), scale)
    assert abs(kin.jerk[1] - jerk_fd) <= 1e-5 * max(abs(kin.jerk[1]), scale * abs(kin.v[1]))
    if x == 0.0:
        assert kin.acc[1] == pytest.approx(0.0, abs=1e-14)


def test_firqnl_classical_example(massive, natural):
    kin = KinematicState(0.0, 1 / SQRT2, 0.0, 0.0)
    assert firqnl_residual(kin, massive, FREE, natural, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_firqnl_photon_example(photon, natural):
    assert firqnl_residual(KinematicState(0.0, 1.0, 0.0, 0.0), photon, FREE, natural, 0.0) == 0.0


def test_firqnl_grid(allowed, massive, natural):
    kin = kinematics_along(allowed, Microstate(2, 0), massive, FREE, natural, np.linspace(-5, 5, 1000))
    assert np.max(np.abs(firqnl_residual(kin, massive, FREE, natural, kin.x))) / massive.E**4 <= 1e-8


def test_firqnl_detects_wrong_kinematics(allowed, massive, natural):
    kin = kinematics_along(allowed, Microstate(2, 0), massive, FREE, natural, 0.3)
    bad = KinematicState(kin.x, kin.v * 1.01, kin.acc, kin.jerk)
    assert abs(firqnl_residual(bad, massive, FREE, natural, 0.3)) > 1e-3


def test_firqnl_terms_sum(allowed, massive, natural):
    kin = kinematics_along(allowed, Microstate(3, 1), massive, FREE, natural, 0.2)
    terms = firqnl_terms(kin, massive, FREE, natural, 0.2)
    assert set(terms) == {"conservation", "kinematic", "potential_curvature", "potential_gradient"}
    assert terms["potential_curvature"] == 0 and terms["potential_gradient"] == 0
    assert sum(terms.values()) == pytest.approx(firqnl_residual(kin, massive, FREE, natural, 0.2), abs=1e-15)


def test_firqnl_zero_velocity(massive, natural):
    with pytest.raises(ZeroVelocity):
        firqnl_residual(KinematicState(0.0, 0.0, 0.0, 0.0), massive, FREE, natural, 0.0)


def test_firqnl_numeric_linear(natural):
    p, pot = ParticleSpec(1, 2), Potential.linear(0.1)
    basis = kg_basis_numeric(p, pot, natural, (0.0, 2.0))
    xs = np.linspace(0.05, 1.95, 500)
    for ms in (Microstate(1, 0), Microstate(2, 0.5), Microstate(-1, 1)):
        kin = kinematics_along(basis, ms, p, pot, natural, xs)
        assert np.max(np.abs(firqnl_residual(kin, p, pot, natural, xs))) / p.E**4 <= 1e-5


def test_action_derivatives_classical(allowed, massive, natural):
    kin = KinematicState(0.0, 1 / SQRT2, 0.0, 0.0)
    d2, d3 = action_derivatives_from_kinematics(kin, massive, FREE, natural, 0.0)
    assert d2 == 0 and d3 == 0


def test_action_derivatives_round_trip_free(allowed, massive, natural):
    ms = Microstate(2, 0)
    kin = kinematics_along(allowed, ms, massive, FREE, natural, 0.3)
    d2, d3 = action_derivatives_from_kinematics(kin, massive, FREE, natural, 0.3)
    st_ = reduced_action(allowed, ms, natural, 0.3)
    assert d2 == pytest.approx(st_.d2S0, rel=1e-6)
    assert d3 == pytest.approx(st_.d3S0, rel=1e-6)


def test_action_derivatives_round_trip_numeric(natural):
    p, pot = ParticleSpec(1, 2), Potential.linear(0.1)
    basis = kg_basis_numeric(p, pot, natural, (0.0, 1.0))
    kin = kinematics_along(basis, Microstate(), p, pot, natural, 0.5)
    d2, d3 = action_derivatives_from_kinematics(kin, p, pot, natural, 0.5)
    st_ = reduced_action(basis, Microstate(), natural, 0.5)
    assert d2 == pytest.approx(st_.d2S0, rel=1e-5)
    assert d3 == pytest.approx(st_.d3S0, rel=1e-5)


def test_fiqnl_classical():
    m, v = 2.0, 0.3
    kin = KinematicState(0.0, v, 0.0, 0.0)
    assert fiqnl_residual(kin, 0.5 * m * v**2, FREE, m, UnitSystem(), 0.0) == pytest.approx(0.0, abs=1e-18)


def test_fiqnl_quantum_microstate(natural):
    m, T = 1.0, 0.5
    basis = TrigBasis(math.sqrt(2 * m * T) / natural.hbar)
    xs = np.linspace(-3, 3, 500)
    kin = kinematics_nonrelativistic(basis, Microstate(2, 0), m, T, FREE, natural, xs)
    assert np.max(np.abs(fiqnl_residual(kin, T, FREE, m, natural, xs))) <= 1e-8 * T**4


def test_fiqnl_detects_violation():
    m, v, T = 1.0, 0.5, 0.3
    got = fiqnl_residual(KinematicState(0.0, v, 0.0, 0.0), T, FREE, m, UnitSystem(), 0.0)
    assert got == pytest.approx(T**3 * (T - 0.5 * m * v**2))
    assert got != 0
