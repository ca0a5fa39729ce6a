"""From action to motion: the momentum-velocity relation

    x_dot = [(E - V)^2 - m0^2 c^4] / [(E - V) P],

time of flight by quadrature, its inversion to x(t), kinematic derivatives
along the path and the first-integral residuals (relativistic and
nonrelativistic).

All kinematics are functions of position: with g(x) = [(E-V)^2 - m0^2 c^4]/(E-V)
the velocity is v = g/P and acc = v dv/dx, jerk = v d(acc)/dx follow by the
chain rule from P, P', P'' and V', V''.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _numerics
from .action import reduced_action
from .errors import DegenerateEnergy, DegeneratePath, RootBracketFailure, SignChange, ZeroMomentum, ZeroVelocity
from .kleingordon import KGBasis
from .model import DEFAULT_DEGENERACY_TOL, Microstate, ParticleSpec, Potential, UnitSystem, energy_gap


@dataclass(frozen=True)
class KinematicState:
    """Velocity, acceleration and jerk at position ``x`` (time ``t`` when known)."""

    x: object
    v: object
    acc: object
    jerk: object
    t: object = None


@dataclass(frozen=True)
class Trajectory:
    """Ordered samples of a trajectory; arrays share one length."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    P: np.ndarray
    branch: np.ndarray
    firqnl_residual: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def momentum_velocity_closure(self) -> float:
        """max |v P (E - V) - [(E - V)^2 - m0^2 c^4]| / E^2 over the samples."""
        p, pot, u = self.meta["particle"], self.meta["potential"], self.meta["units"]
        eps = p.E - pot.value(self.x)
        gap = eps**2 - p.rest_energy(u) ** 2
        return float(np.max(np.abs(self.v * self.P * eps - gap)) / p.E**2)


def _check_gap(gap, tol, x):
    if np.any(np.abs(gap) <= tol):
        raise DegenerateEnergy(f"(E - V)^2 = m0^2 c^4 within {tol:g} at x = {x!r}")


def velocity_from_momentum(P, p: ParticleSpec, pot: Potential, u: UnitSystem, x, tol: float = DEFAULT_DEGENERACY_TOL):
    """x_dot = [(E-V)^2 - m0^2 c^4] / [(E-V) P]. Same sign as P in allowed
    regions, opposite sign in forbidden ones."""
    if np.any(np.asarray(P) == 0):
        raise ZeroMomentum("conjugate momentum is zero")
    eps = p.E - pot.value(x)
    gap = eps**2 - p.rest_energy(u) ** 2
    _check_gap(gap, tol, x)
    return gap / (eps * P)


def _velocity_factor(p, pot, u, x):
    """g = [(E-V)^2 - M]/(E-V) and its first two x-derivatives (M = m0^2 c^4)."""
    V, dV, d2V = pot(x)
    eps = p.E - V
    M = p.rest_energy(u) ** 2
    g = eps - M / eps
    g1 = -dV * (1 + M / eps**2)
    g2 = -d2V * (1 + M / eps**2) - 2 * M * dV**2 / eps**3
    return g, g1, g2


def _kinematics_from(x, g, g1, g2, P, P1, P2) -> KinematicState:
    v = g / P
    dv = g1 / P - g * P1 / P**2
    d2v = g2 / P - 2 * g1 * P1 / P**2 - g * P2 / P**2 + 2 * g * P1**2 / P**3
    acc = v * dv
    jerk = v * (dv**2 + v * d2v)
    return KinematicState(x, v, acc, jerk)


def kinematics_along(basis: KGBasis, ms: Microstate, p: ParticleSpec, pot: Potential, u: UnitSystem, x, tol: float = DEFAULT_DEGENERACY_TOL) -> KinematicState:
    st = reduced_action(basis, ms, u, x)
    if np.any(st.P == 0):
        raise ZeroMomentum("conjugate momentum is zero")
    _check_gap(energy_gap(p, pot, u, x), tol, x)
    g, g1, g2 = _velocity_factor(p, pot, u, x)
    return _kinematics_from(x, g, g1, g2, st.P, st.d2S0, st.d3S0)


def kinematics_nonrelativistic(basis: KGBasis, ms: Microstate, m: float, E_nr: float, pot: Potential, u: UnitSystem, x) -> KinematicState:
    """Kinematics from P = 2 (E_nr - V)/x_dot, the c -> infinity limit of the
    momentum-velocity relation. ``basis`` must solve the Schrodinger equation."""
    st = reduced_action(basis, ms, u, x)
    V, dV, d2V = pot(x)
    return _kinematics_from(x, 2 * (E_nr - V), -2 * dV, -2 * d2V, st.P, st.d2S0, st.d3S0)


def firqnl_terms(kin: KinematicState, p: ParticleSpec, pot: Potential, u: UnitSystem, x) -> dict:
    """Individual terms of the first integral of the relativistic quantum
    Newton law. Their sum vanishes on every trajectory.

    ``conservation`` is the hbar-free part, [(E-V)^2 - M] ([(E-V)^2 - M] - (v/c)^2 (E-V)^2),
    which vanishes exactly on classical relativistic motion.
    """
    V, dV, d2V = pot(x)
    eps = p.E - V
    M = p.rest_energy(u) ** 2
    D = eps**2 - M
    ratio = (eps**2 + M) / D
    v, acc, jerk = kin.v, kin.acc, kin.jerk
    h2 = u.hbar**2
    return {
        "conservation": D**2 - (v / u.c) ** 2 * eps**2 * D,
        "kinematic": 0.5 * h2 * (1.5 * (acc / v) ** 2 - jerk / v) * eps**2,
        "potential_curvature": -0.5 * h2 * (acc * dV + v**2 * d2V) * ratio * eps,
        "potential_gradient": -0.75 * h2 * (v * dV) ** 2 * ratio**2 - h2 * (v * dV) ** 2 * M / D,
    }


def firqnl_residual(kin: KinematicState, p: ParticleSpec, pot: Potential, u: UnitSystem, x, tol: float = DEFAULT_DEGENERACY_TOL):
    if np.any(np.asarray(kin.v) == 0):
        raise ZeroVelocity("velocity is zero")
    _check_gap(energy_gap(p, pot, u, x), tol, x)
    terms = firqnl_terms(kin, p, pot, u, x)
    return terms["conservation"] + terms["kinematic"] + terms["potential_curvature"] + terms["potential_gradient"]


def action_derivatives_from_kinematics(kin: KinematicState, p: ParticleSpec, pot: Potential, u: UnitSystem, x, tol: float = DEFAULT_DEGENERACY_TOL):
    """Second and third x-derivatives of S0 expressed through v, acc, jerk."""
    if np.any(np.asarray(kin.v) == 0):
        raise ZeroVelocity("velocity is zero")
    _check_gap(energy_gap(p, pot, u, x), tol, x)
    V, dV, d2V = pot(x)
    eps = p.E - V
    M = p.rest_energy(u) ** 2
    v, acc, jerk = kin.v, kin.acc, kin.jerk
    d2 = -dV / v * (1 + M / eps**2) + acc / v**3 / eps * (M - eps**2)
    d3 = (
        -d2V / v * (1 + M / eps**2)
        + (3 * acc**2 / v**5 - jerk / v**4) * (eps**2 - M) / eps
        + 2 * acc / v**3 * dV * (eps**2 + M) / eps**2
        - 2 / v * dV**2 * M / eps**3
    )
    return d2, d3


def fiqnl_residual(kin: KinematicState, E_nr: float, pot_nr: Potential, m: float, u: UnitSystem, x):
    """First integral of the nonrelativistic quantum Newton law:

    T^4 - (m v^2/2) T^3 + (hbar^2/8)[(3/2)(acc/v)^2 - jerk/v] T^2
        - (hbar^2/8)(v^2 V'' + acc V') T - (3 hbar^2/16)(v V')^2,   T = E_nr - V.
    """
    if np.any(np.asarray(kin.v) == 0):
        raise ZeroVelocity("velocity is zero")
    V, dV, d2V = pot_nr(x)
    T = E_nr - V
    v, acc, jerk = kin.v, kin.acc, kin.jerk
    h2 = u.hbar**2
    return (
        T**4
        - 0.5 * m * v**2 * T**3
        + h2 / 8 * (1.5 * (acc / v) ** 2 - jerk / v) * T**2
        - h2 / 8 * (v**2 * d2V + acc * dV) * T
        - 3 * h2 / 16 * (v * dV) ** 2
    )


class FlightMap:
    """Time-of-flight map anchored at the microstate point (t0, x0), and its
    inverse x(t) by bracketed Newton iteration on the monotone map."""

    def __init__(self, basis: KGBasis, ms: Microstate, p: ParticleSpec, pot: Potential, u: UnitSystem, quad_tol: float = 1e-13, time_tol: float = 1e-12, deg_tol: float = DEFAULT_DEGENERACY_TOL):
        self.basis, self.ms, self.p, self.pot, self.u = basis, ms, p, pot, u
        self.quad_tol = quad_tol
        self.time_tol = time_tol
        self.deg_tol = deg_tol
        v0 = float(self.velocity(ms.x0))
        self.direction = 1.0 if v0 > 0 else -1.0

    def velocity(self, x):
        P = _momentum(self.basis, self.ms, self.u, x)
        return velocity_from_momentum(P, self.p, self.pot, self.u, x, self.deg_tol)

    def slowness(self, x):
        """dt/dx = (E - V) P / [(E - V)^2 - m0^2 c^4]."""
        eps = self.p.E - self.pot.value(x)
        gap = eps**2 - self.p.rest_energy(self.u) ** 2
        return eps * _momentum(self.basis, self.ms, self.u, x) / gap

    def check_path(self, lo, hi, samples=65):
        xs = np.linspace(lo, hi, samples)
        gap = energy_gap(self.p, self.pot, self.u, xs)
        if np.any(np.abs(gap) <= self.deg_tol) or np.any(np.sign(gap) != np.sign(gap[0])):
            raise DegeneratePath(f"path [{lo}, {hi}] touches the degenerate band")
        s = np.sign(self.slowness(xs))
        if np.any(s != s[0]):
            raise SignChange(f"velocity changes sign inside [{lo}, {hi}]")

    def duration(self, x_from: float, x_to: float) -> float:
        if x_from == x_to:
            return 0.0
        return _numerics.integrate(self.slowness, x_from, x_to, abstol=self.quad_tol, reltol=self.quad_tol)

    def time(self, x: float) -> float:
        return self.ms.t0 + self.duration(self.ms.x0, x)

    def _step(self, x_prev: float, dt: float) -> float:
        """Position reached from x_prev after elapsed (signed) time dt."""
        if dt == 0:
            return x_prev
        sgn = self.direction * (1.0 if dt > 0 else -1.0)
        target = abs(dt)

        def excess(s):
            return abs(self.duration(x_prev, x_prev + sgn * s)) - target

        def rate(s):
            return abs(float(self.slowness(x_prev + sgn * s)))

        speed = abs(float(self.velocity(x_prev)))
        hi = 2.0 * speed * target
        for _ in range(200):
            if excess(hi) > 0:
                break
            hi *= 2.0
        else:
            raise RootBracketFailure("could not bracket the time-of-flight root")
        self.check_path(x_prev, x_prev + sgn * hi)
        s = _numerics.bracketed_newton(excess, rate, 0.0, hi, x0=speed * target, ftol=self.time_tol)
        return x_prev + sgn * s

    def positions(self, times) -> np.ndarray:
        """x(t) at each time, marching outward from the anchor (t0, x0)."""
        times = np.asarray(times, dtype=float)
        out = np.empty_like(times)
        order = np.argsort(times)
        t0, x0 = self.ms.t0, self.ms.x0
        fwd = [i for i in order if times[i] >= t0]
        bwd = [i for i in order[::-1] if times[i] < t0]
        for seq in (fwd, bwd):
            t_prev, x_prev = t0, x0
            for i in seq:
                x_prev = self._step(x_prev, times[i] - t_prev)
                t_prev = times[i]
                out[i] = x_prev
        return out


def _momentum(basis, ms, u, x):
    th, _, ph, _ = basis.evaluate(x)
    return u.hbar * ms.a * basis.wronskian / (ph**2 + (ms.a * th + ms.b * ph) ** 2)


def time_of_flight(basis: KGBasis, ms: Microstate, p: ParticleSpec, pot: Potential, u: UnitSystem, x_from: float, x_to: float, tol: float = 1e-13, deg_tol: float = DEFAULT_DEGENERACY_TOL) -> float:
    """t = int (E-V) P / [(E-V)^2 - m0^2 c^4] dx' from x_from to x_to."""
    if x_from == x_to:
        return 0.0
    fm = FlightMap(basis, ms.replace(x0=x_from), p, pot, u, quad_tol=tol, deg_tol=deg_tol)
    fm.check_path(min(x_from, x_to), max(x_from, x_to))
    return fm.duration(x_from, x_to)


def node_guard_mask(times, node_times, guard: float) -> np.ndarray:
    """True for samples farther than ``guard`` from every node time."""
    times = np.asarray(times, dtype=float)
    keep = np.ones(times.shape, dtype=bool)
    for tn in np.atleast_1d(node_times):
        keep &= np.abs(times - tn) > guard
    return keep


def trajectory_by_quadrature(
    basis: KGBasis,
    ms: Microstate,
    p: ParticleSpec,
    pot: Potential,
    u: UnitSystem,
    t_span: tuple,
    n_samples: int,
    node_times=None,
    guard: float = 0.0,
    quad_tol: float = 1e-13,
    time_tol: float = 1e-12,
    deg_tol: float = DEFAULT_DEGENERACY_TOL,
) -> Trajectory:
    """Trajectory through (ms.t0, ms.x0) sampled uniformly on ``t_span``.

    ``ms.a``, ``ms.b`` are the reduced-action constants of ``basis``. Samples
    closer than ``guard`` to any of ``node_times`` are dropped.
    """
    t_start, t_end = (float(v) for v in t_span)
    if not t_end > t_start:
        raise ValueError("t_span must be increasing")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    times = np.linspace(t_start, t_end, n_samples)
    if node_times is not None and guard > 0:
        times = times[node_guard_mask(times, node_times, guard)]
    fm = FlightMap(basis, ms, p, pot, u, quad_tol, time_tol, deg_tol)
    xs = fm.positions(times)
    st = reduced_action(basis, ms, u, xs)
    v = velocity_from_momentum(st.P, p, pot, u, xs, deg_tol)
    g, g1, g2 = _velocity_factor(p, pot, u, xs)
    kin = _kinematics_from(xs, g, g1, g2, st.P, st.d2S0, st.d3S0)
    residual = firqnl_residual(kin, p, pot, u, xs, deg_tol)
    branch = np.rint(st.S0 / (u.hbar * math.pi)).astype(int)
    meta = {"particle": p, "microstate": ms, "potential": pot, "units": u, "basis": basis}
    return Trajectory(times, xs, v, st.P, branch, residual, meta)
