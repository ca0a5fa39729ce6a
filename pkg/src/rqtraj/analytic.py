"""Closed-form trajectories and node laws for the free particle, the photon
and the classically forbidden region.

Free motion (photon: m0 = 0) with k = sqrt(E^2 - m0^2 c^4)/(hbar c) and
omega = (E^2 - m0^2 c^4)/(hbar E):

    x(t) = [arctan(a tan(omega tau) + b) + sign(a) n pi] / k + x0,   tau = t - t0,

with branch n = round(omega tau / pi). All trajectories of one energy cross
at the nodes omega tau = (n + 1/2) pi.

The reduced action arctan(a theta/phi + b) produces the inverse relation
omega tau = arctan(a tan(k y) + b); :func:`quadrature_counterpart` maps a
closed-form microstate onto the action constants (1/a, -b/a) that reproduce
it through time-of-flight quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEnergy, InvalidConstants, SingularTime, WrongRegime
from .kleingordon import ExpBasis, TrigBasis, kg_basis_free_allowed, kg_basis_free_forbidden
from .model import DEFAULT_DEGENERACY_TOL, Microstate, ParticleSpec, UnitSystem


def _allowed_scales(p: ParticleSpec, u: UnitSystem, tol: float):
    M = p.rest_energy(u) ** 2
    gap = p.E**2 - M
    if abs(gap) <= tol * (M + p.E**2):
        raise DegenerateEnergy(f"E = {p.E!r} equals the rest energy {p.rest_energy(u)!r}")
    if gap < 0:
        raise WrongRegime(f"E = {p.E!r} below the rest energy {p.rest_energy(u)!r}")
    k = math.sqrt(gap) / (u.hbar * u.c)
    omega = gap / (u.hbar * p.E)
    return k, omega


def _forbidden_scales(p: ParticleSpec, u: UnitSystem, tol: float):
    M = p.rest_energy(u) ** 2
    gap = p.E**2 - M
    if abs(gap) <= tol * (M + p.E**2):
        raise DegenerateEnergy(f"E = {p.E!r} equals the rest energy {p.rest_energy(u)!r}")
    if gap > 0:
        raise WrongRegime(f"E = {p.E!r} above the rest energy {p.rest_energy(u)!r}")
    kappa = math.sqrt(-gap) / (u.hbar * u.c)
    omega = gap / (u.hbar * p.E)
    return kappa, omega


def _branch_phase(omega, t, t0):
    phase = omega * (np.asarray(t, dtype=float) - t0)
    n = np.rint(phase / np.pi)
    return phase, phase - n * np.pi, n


def free_trajectory_closed(p: ParticleSpec, ms: Microstate, u: UnitSystem, t, tol: float = DEFAULT_DEGENERACY_TOL):
    """Position and branch index of the free-particle trajectory at ``t``.

    Works for m0 = 0 as well; :func:`photon_trajectory_closed` is the photon
    entry point. For a < 0 the branch term flips sign so x(t) stays
    continuous (motion towards -x).
    """
    k, omega = _allowed_scales(p, u, tol)
    _, r, n = _branch_phase(omega, t, ms.t0)
    x = (np.arctan(ms.a * np.tan(r) + ms.b) + math.copysign(1.0, ms.a) * n * np.pi) / k + ms.x0
    return x, n.astype(int)


def photon_trajectory_closed(E: float, ms: Microstate, u: UnitSystem, t):
    return free_trajectory_closed(ParticleSpec(0.0, E), ms, u, t)


def free_kinematics_closed(p: ParticleSpec, ms: Microstate, u: UnitSystem, t, tol: float = DEFAULT_DEGENERACY_TOL):
    """(x, v, acc) of the closed-form free trajectory, differentiated in t.

    With C = cos r, S = sin r and Q = C^2 + (a S + b C)^2,
    v = a omega / (k Q) and acc = -a omega^2 Q_r / (k Q^2).
    """
    k, omega = _allowed_scales(p, u, tol)
    x, _ = free_trajectory_closed(p, ms, u, t, tol)
    _, r, _ = _branch_phase(omega, t, ms.t0)
    a, b = ms.a, ms.b
    C, S = np.cos(r), np.sin(r)
    mix = a * S + b * C
    Q = C**2 + mix**2
    dQ = -2 * C * S + 2 * mix * (a * C - b * S)
    v = a * omega / (k * Q)
    acc = -a * omega**2 * dQ / (k * Q**2)
    return x, v, acc


@dataclass(frozen=True)
class NodeLattice:
    """Node times t_n = t0 + dt (n + 1/2) and positions x_n = x0 + dx (n + 1/2)."""

    dt: float
    dx: float
    t0: float = 0.0
    x0: float = 0.0

    def t(self, n):
        return self.t0 + self.dt * (np.asarray(n, dtype=float) + 0.5)

    def x(self, n):
        return self.x0 + self.dx * (np.asarray(n, dtype=float) + 0.5)

    @property
    def velocity(self) -> float:
        return self.dx / self.dt

    def nodes(self, count: int, first: int = 0) -> list:
        return [{"n": n, "t": float(self.t(n)), "x": float(self.x(n))} for n in range(first, first + count)]

    def indices_between(self, t_lo: float, t_hi: float) -> np.ndarray:
        n_lo = math.ceil((t_lo - self.t0) / self.dt - 0.5)
        n_hi = math.floor((t_hi - self.t0) / self.dt - 0.5)
        return np.arange(n_lo, n_hi + 1)


def node_lattice(p: ParticleSpec, u: UnitSystem, ms: Microstate | None = None, tol: float = DEFAULT_DEGENERACY_TOL) -> NodeLattice:
    """dt = pi hbar E / (E^2 - m0^2 c^4), dx = pi hbar c / sqrt(E^2 - m0^2 c^4)
    (photon: pi hbar / E and pi hbar c / E)."""
    k, omega = _allowed_scales(p, u, tol)
    ms = ms or Microstate()
    return NodeLattice(math.pi / omega, math.pi / k, ms.t0, ms.x0)


def mean_velocity(p: ParticleSpec, u: UnitSystem, tol: float = DEFAULT_DEGENERACY_TOL) -> float:
    """c sqrt(E^2 - m0^2 c^4) / E; exactly c for a photon."""
    _allowed_scales(p, u, tol)
    if p.m0 == 0:
        return u.c
    return u.c * math.sqrt(p.E**2 - p.rest_energy(u) ** 2) / p.E


def node_report(p: ParticleSpec, u: UnitSystem, ms: Microstate | None = None, count: int = 5) -> dict:
    lat = node_lattice(p, u, ms)
    return {"dt": lat.dt, "dx": lat.dx, "mean_velocity": mean_velocity(p, u), "nodes": lat.nodes(count)}


def quadrature_counterpart(p: ParticleSpec, ms: Microstate, u: UnitSystem, tol: float = DEFAULT_DEGENERACY_TOL):
    """Basis and action microstate whose time-of-flight trajectory equals the
    closed-form trajectory of ``ms``.

    The basis is anchored at ms.x0, the action constants are (1/a, -b/a) and
    the start point is the closed-form position at ms.t0.
    """
    if p.E**2 > p.rest_energy(u) ** 2:
        basis = kg_basis_free_allowed(p, u, tol, origin=ms.x0)
        x_start = ms.x0 + math.atan(ms.b) / basis.k
        return basis, Microstate(1.0 / ms.a, -ms.b / ms.a, x_start, ms.t0)
    raise WrongRegime("forbidden-region counterparts depend on the segment; use forbidden_counterpart")


def _forbidden_argument(p, ms, u, t, tol):
    kappa, omega = _forbidden_scales(p, u, tol)
    r = omega * (np.asarray(t, dtype=float) - ms.t0)
    return kappa, omega, r


def forbidden_singular_times(p: ParticleSpec, ms: Microstate, u: UnitSystem, t_lo: float, t_hi: float, tol: float = DEFAULT_DEGENERACY_TOL) -> list:
    """Singular times in [t_lo, t_hi], sorted: zeros of a tan(omega tau) + b
    (kind ``"log"``, x -> -inf, |v| -> inf) and tan poles (kind ``"pole"``, x -> +inf)."""
    _, omega = _forbidden_scales(p, u, tol)
    period = math.pi / abs(omega)
    out = []
    for kind, base in (("log", math.atan(-ms.b / ms.a)), ("pole", 0.5 * math.pi)):
        # omega tau = base + n pi
        taus = [(base + n * math.pi) / omega for n in range(-2, 3)]
        t_ref = min(taus, key=abs) + ms.t0
        n_lo = math.floor((t_lo - t_ref) / period) - 1
        n_hi = math.ceil((t_hi - t_ref) / period) + 1
        for n in range(n_lo, n_hi + 1):
            ts = t_ref + n * period
            if t_lo <= ts <= t_hi:
                out.append((ts, kind))
    out.sort()
    return out


def _nearest_singular(p, ms, u, t, tol):
    _, omega = _forbidden_scales(p, u, tol)
    period = math.pi / abs(omega)
    cands = forbidden_singular_times(p, ms, u, t - period, t + period, tol)
    return min(cands, key=lambda c: abs(c[0] - t))[0]


def _check_regular(p, ms, u, t, w, cos_r, tol, rel=1e-14):
    bad = (np.abs(w) <= rel * (abs(ms.a) + abs(ms.b))) | (np.abs(cos_r) <= rel)
    if np.any(bad):
        t_bad = float(np.atleast_1d(np.asarray(t, dtype=float))[np.atleast_1d(bad)][0])
        nearest = _nearest_singular(p, ms, u, t_bad, tol)
        raise SingularTime(f"t = {t_bad!r} is singular (nearest singular time {nearest!r})", nearest)


def forbidden_trajectory_closed(p: ParticleSpec, ms: Microstate, u: UnitSystem, t, tol: float = DEFAULT_DEGENERACY_TOL):
    """x(t) = ln|a tan(omega tau) + b| / (2 kappa) + x0, omega = (E^2 - m0^2 c^4)/(hbar E) < 0."""
    kappa, omega, r = _forbidden_argument(p, ms, u, t, tol)
    w = ms.a * np.tan(r) + ms.b
    _check_regular(p, ms, u, t, w, np.cos(r), tol)
    return np.log(np.abs(w)) / (2 * kappa) + ms.x0


def forbidden_velocity_closed(p: ParticleSpec, ms: Microstate, u: UnitSystem, t, tol: float = DEFAULT_DEGENERACY_TOL):
    """Time derivative of :func:`forbidden_trajectory_closed`:

    v = -(a c sqrt(m0^2 c^4 - E^2) / 2E) (1 + tan^2(omega tau)) / (a tan(omega tau) + b).
    """
    kappa, omega, r = _forbidden_argument(p, ms, u, t, tol)
    C, S = np.cos(r), np.sin(r)
    w = ms.a * np.tan(r) + ms.b
    _check_regular(p, ms, u, t, w, C, tol)
    return ms.a * omega / (2 * kappa * C * (ms.a * S + ms.b * C))


def forbidden_velocity_as_printed(p: ParticleSpec, ms: Microstate, u: UnitSystem, t, tol: float = DEFAULT_DEGENERACY_TOL):
    """-(a c / 2E)(1 + tan^2)/(a tan + b): lacks the factor sqrt(m0^2 c^4 - E^2)
    of the true derivative. Kept for audit only."""
    _, _, r = _forbidden_argument(p, ms, u, t, tol)
    tan = np.tan(r)
    return -(ms.a * u.c / (2 * p.E)) * (1 + tan**2) / (ms.a * tan + ms.b)


def forbidden_counterpart(p: ParticleSpec, ms: Microstate, u: UnitSystem, t: float, tol: float = DEFAULT_DEGENERACY_TOL):
    """Basis and action microstate whose reduced action reproduces the
    forbidden-region trajectory on the segment containing ``t``.

    Uses theta = exp(+kappa y), phi = exp(-kappa y) anchored at x0 and
    constants (s/a, -b/a), with s the sign of a tan(omega tau) + b on the segment.
    """
    kappa, omega, r = _forbidden_argument(p, ms, u, t, tol)
    w = ms.a * math.tan(float(r)) + ms.b
    sign = 1.0 if w > 0 else -1.0
    basis = kg_basis_free_forbidden(p, u, tol, origin=ms.x0, orientation=-1)
    return basis, Microstate(sign / ms.a, -ms.b / ms.a, ms.x0, ms.t0)


def forbidden_segments(p: ParticleSpec, ms: Microstate, u: UnitSystem, t_lo: float, t_hi: float, samples: int = 50, guard: float = 1e-3, tol: float = DEFAULT_DEGENERACY_TOL):
    """Split [t_lo, t_hi] at singular times and sample each regular segment.

    ``guard`` is the fraction of the half-period kept clear at each singular
    end. Returns (singular_times, segments) with segments as lists of
    ``(t, x, v)`` arrays.
    """
    if not t_hi > t_lo:
        raise ValueError("time interval must be increasing")
    _, omega = _forbidden_scales(p, u, tol)
    pad = guard * math.pi / abs(omega)
    singular = forbidden_singular_times(p, ms, u, t_lo, t_hi, tol)
    edges = [(t_lo, False)] + [(ts, True) for ts, _ in singular] + [(t_hi, False)]
    segments = []
    for (lo, lo_sing), (hi, hi_sing) in zip(edges[:-1], edges[1:]):
        a = lo + pad if lo_sing else lo
        b = hi - pad if hi_sing else hi
        if b - a <= 0:
            continue
        ts = np.linspace(a, b, samples)
        try:
            xs = forbidden_trajectory_closed(p, ms, u, ts, tol)
        except SingularTime:
            continue
        segments.append((ts, xs, forbidden_velocity_closed(p, ms, u, ts, tol)))
    return singular, segments
