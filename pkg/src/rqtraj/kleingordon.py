"""Pairs of real independent solutions of the stationary Klein-Gordon equation

    -c^2 hbar^2 psi'' + [m0^2 c^4 - (E - V)^2] psi = 0,

written throughout as psi'' = q(x) psi with q = [m0^2 c^4 - (E-V)^2] / (hbar c)^2.

Analytic bases cover the free particle in both regimes; :func:`kg_basis_numeric`
integrates arbitrary potentials on a finite domain.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ._numerics import rk4_second_order, wrap_to_pi
from .errors import DegenerateEnergy, DomainError, IntegrationFailure, WrongRegime, WronskianDrift
from .model import DEFAULT_DEGENERACY_TOL, ParticleSpec, Potential, Region, UnitSystem, classify_region


class KGBasis:
    """Two solutions theta, phi of psi'' = q psi and their Wronskian
    W = theta' phi - theta phi' (constant).

    Subclasses implement :meth:`evaluate`, :meth:`q` and :meth:`phase`.
    """

    regime: Region | None = None
    wronskian: float = float("nan")
    k_or_kappa: float | None = None
    domain: tuple = (-math.inf, math.inf)
    origin: float = 0.0

    def evaluate(self, x):
        """Return ``(theta, theta', phi, phi')`` at ``x``."""
        raise NotImplementedError

    def q(self, x):
        raise NotImplementedError

    def theta(self, x):
        th, dth, _, _ = self.evaluate(x)
        return th, dth

    def phi(self, x):
        _, _, ph, dph = self.evaluate(x)
        return ph, dph

    def phase(self, a: float, b: float, x):
        """Continuous polar angle of the point (phi, a theta + b phi).

        Equals arctan(a theta/phi + b) up to the multiple of pi that keeps it
        continuous; it is pinned to the principal value at :attr:`origin`.
        """
        raise NotImplementedError

    def local_wronskian(self, x):
        th, dth, ph, dph = self.evaluate(x)
        return dth * ph - th * dph

    def second_derivatives(self, x):
        th, _, ph, _ = self.evaluate(x)
        qx = self.q(x)
        return qx * th, qx * ph

    def kg_residual(self, x):
        """Klein-Gordon residual |psi'' - q psi| scaled by the local amplitude
        |q psi| + sqrt|q| |psi'|, maximised over both solutions."""
        th, dth, ph, dph = self.evaluate(x)
        d2th, d2ph = self._raw_second_derivatives(x)
        qx = self.q(x)
        res = []
        for psi, dpsi, d2 in ((th, dth, d2th), (ph, dph, d2ph)):
            scale = np.abs(qx * psi) + np.sqrt(np.abs(qx)) * np.abs(dpsi) + 1e-300
            res.append(np.abs(d2 - qx * psi) / scale)
        return np.maximum(res[0], res[1])

    def _raw_second_derivatives(self, x):
        return self.second_derivatives(x)

    def _check_domain(self, x):
        lo, hi = self.domain
        xa = np.asarray(x, dtype=float)
        slack = 1e-12 * max(1.0, abs(lo) if math.isfinite(lo) else 1.0, abs(hi) if math.isfinite(hi) else 1.0)
        if np.any(xa < lo - slack) or np.any(xa > hi + slack):
            raise DomainError(f"x outside basis domain [{lo}, {hi}]")
        return xa


class TrigBasis(KGBasis):
    """theta = sin(k (x - origin)), phi = cos(k (x - origin)); W = k."""

    def __init__(self, k: float, origin: float = 0.0):
        if not k > 0:
            raise ValueError("wavenumber must be positive")
        self.k = float(k)
        self.k_or_kappa = self.k
        self.origin = float(origin)
        self.wronskian = self.k
        self.regime = Region.ALLOWED

    def __repr__(self):
        return f"TrigBasis(k={self.k!r}, origin={self.origin!r})"

    def evaluate(self, x):
        y = self.k * (np.asarray(x, dtype=float) - self.origin)
        s, c = np.sin(y), np.cos(y)
        return s, self.k * c, c, -self.k * s

    def q(self, x):
        return np.full_like(np.asarray(x, dtype=float), -self.k**2)

    def _raw_second_derivatives(self, x):
        th, _, ph, _ = self.evaluate(x)
        return -self.k**2 * th, -self.k**2 * ph

    def phase(self, a, b, x):
        y = self.k * (np.asarray(x, dtype=float) - self.origin)
        s, c = np.sin(y), np.cos(y)
        principal = np.arctan2(a * s + b * c, c)
        # the true angle stays within pi of sign(a) * k y, which fixes the 2 pi multiple
        estimate = math.copysign(1.0, a) * y
        return principal + 2 * np.pi * np.round((estimate - principal) / (2 * np.pi))


class ExpBasis(KGBasis):
    """theta = exp(-s kappa y), phi = exp(+s kappa y), y = x - origin,
    with orientation s = +1 (default) or -1; W = -2 s kappa."""

    def __init__(self, kappa: float, origin: float = 0.0, orientation: int = 1):
        if not kappa > 0:
            raise ValueError("decay constant must be positive")
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self.kappa = float(kappa)
        self.k_or_kappa = self.kappa
        self.origin = float(origin)
        self.orientation = orientation
        self.wronskian = -2.0 * orientation * self.kappa
        self.regime = Region.FORBIDDEN

    def __repr__(self):
        return f"ExpBasis(kappa={self.kappa!r}, origin={self.origin!r}, orientation={self.orientation})"

    def evaluate(self, x):
        sk = self.orientation * self.kappa
        y = np.asarray(x, dtype=float) - self.origin
        th, ph = np.exp(-sk * y), np.exp(sk * y)
        return th, -sk * th, ph, sk * ph

    def q(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.kappa**2)

    def _raw_second_derivatives(self, x):
        th, _, ph, _ = self.evaluate(x)
        return self.kappa**2 * th, self.kappa**2 * ph

    def phase(self, a, b, x):
        # phi > 0 everywhere, so the principal branch is already continuous
        y = np.asarray(x, dtype=float) - self.origin
        return np.arctan(a * np.exp(-2 * self.orientation * self.kappa * y) + b)


class NumericBasis(KGBasis):
    """Sampled basis on a uniform grid, interpolated with cubic Hermite
    splines on (psi, psi') and (psi', psi'')."""

    def __init__(self, grid, values, qfun, richardson_error: float, wronskian_drift: float):
        self.grid = np.asarray(grid, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self._qfun = qfun
        self.domain = (float(self.grid[0]), float(self.grid[-1]))
        self.origin = self.domain[0]
        self.richardson_error = richardson_error
        self.wronskian_drift = wronskian_drift
        th, dth, ph, dph = self.values.T
        qg = qfun(self.grid)
        self.wronskian = float(dth[0] * ph[0] - th[0] * dph[0])
        self._th = CubicHermiteSpline(self.grid, th, dth)
        self._dth = CubicHermiteSpline(self.grid, dth, qg * th)
        self._ph = CubicHermiteSpline(self.grid, ph, dph)
        self._dph = CubicHermiteSpline(self.grid, dph, qg * ph)
        self._phase_cache = {}

    def __repr__(self):
        return f"NumericBasis(domain={self.domain!r}, points={len(self.grid)})"

    def evaluate(self, x):
        xa = self._check_domain(x)
        return self._th(xa), self._dth(xa), self._ph(xa), self._dph(xa)

    def q(self, x):
        return self._qfun(np.asarray(x, dtype=float))

    def _raw_second_derivatives(self, x):
        xa = self._check_domain(x)
        return self._dth(xa, 1), self._dph(xa, 1)

    def _grid_phase(self, a, b):
        key = (float(a), float(b))
        if key not in self._phase_cache:
            th, _, ph, _ = self.values.T
            principal = np.arctan2(a * th + b * ph, ph)
            unwrapped = np.unwrap(principal)
            if np.any(np.abs(np.diff(unwrapped)) > 0.5 * np.pi):
                raise IntegrationFailure("grid too coarse to track the action phase")
            self._phase_cache[key] = unwrapped
        return self._phase_cache[key]

    def phase(self, a, b, x):
        xa = self._check_domain(x)
        grid_phase = self._grid_phase(a, b)
        h = self.grid[1] - self.grid[0]
        idx = np.clip(np.rint((xa - self.grid[0]) / h).astype(int), 0, len(self.grid) - 1)
        th, _, ph, _ = self.evaluate(xa)
        principal = np.arctan2(a * th + b * ph, ph)
        anchor = grid_phase[idx]
        return anchor + wrap_to_pi(principal - anchor)


def _check_free_energy(p: ParticleSpec, u: UnitSystem, tol: float) -> float:
    rest2 = p.rest_energy(u) ** 2
    gap = p.E**2 - rest2
    if abs(gap) <= tol * (rest2 + p.E**2):
        raise DegenerateEnergy(f"E = {p.E!r} equals the rest energy m0 c^2 = {p.rest_energy(u)!r}")
    return gap


def kg_basis_free_allowed(p: ParticleSpec, u: UnitSystem, tol: float = DEFAULT_DEGENERACY_TOL, origin: float = 0.0) -> TrigBasis:
    """sin/cos basis with k = sqrt(E^2 - m0^2 c^4) / (hbar c); requires E > m0 c^2."""
    gap = _check_free_energy(p, u, tol)
    if gap < 0:
        raise WrongRegime(f"E = {p.E!r} < m0 c^2 = {p.rest_energy(u)!r}: classically forbidden")
    return TrigBasis(math.sqrt(gap) / (u.hbar * u.c), origin)


def kg_basis_free_forbidden(p: ParticleSpec, u: UnitSystem, tol: float = DEFAULT_DEGENERACY_TOL, origin: float = 0.0, orientation: int = 1) -> ExpBasis:
    """exp(-kappa x), exp(+kappa x) basis with kappa = sqrt(m0^2 c^4 - E^2) / (hbar c);
    requires 0 < E < m0 c^2. ``orientation=-1`` swaps the two exponentials."""
    gap = _check_free_energy(p, u, tol)
    if gap > 0:
        raise WrongRegime(f"E = {p.E!r} > m0 c^2 = {p.rest_energy(u)!r}: classically allowed")
    return ExpBasis(math.sqrt(-gap) / (u.hbar * u.c), origin, orientation)


def kg_coefficient(p: ParticleSpec, pot: Potential, u: UnitSystem):
    """Return q(x) = [m0^2 c^4 - (E - V(x))^2] / (hbar c)^2 as a vectorised callable."""
    rest2 = p.rest_energy(u) ** 2
    scale = (u.hbar * u.c) ** 2

    def q(x):
        eps = p.E - pot.value(x)
        return (rest2 - eps**2) / scale

    return q


def kg_basis_numeric(
    p: ParticleSpec,
    pot: Potential,
    u: UnitSystem,
    domain: tuple,
    step: float = 1e-3,
    wronskian_tol: float = 1e-8,
    richardson_tol: float = 1e-8,
) -> NumericBasis:
    """Integrate the Klein-Gordon equation on ``domain`` with fixed-step RK4.

    Initial data (theta, theta') = (0, 1) and (phi, phi') = (1, 0) at the left
    end, so W = +1. The run is repeated at half the step; the difference gives
    a Richardson error estimate and the extrapolated values are kept.

    Raises:
        IntegrationFailure: non-finite values or Richardson estimate above
            ``richardson_tol`` (relative to the largest sample).
        WronskianDrift: max relative Wronskian change above ``wronskian_tol``.
    """
    x_min, x_max = (float(v) for v in domain)
    if not (math.isfinite(x_min) and math.isfinite(x_max) and x_max > x_min):
        raise ValueError(f"invalid domain {domain!r}")
    if not step > 0:
        raise ValueError("step must be positive")
    n = max(2, int(math.ceil((x_max - x_min) / step - 1e-9)))
    grid = np.linspace(x_min, x_max, n + 1)
    h = (x_max - x_min) / n
    qfun = kg_coefficient(p, pot, u)
    y0 = (0.0, 1.0, 1.0, 0.0)

    with np.errstate(all="ignore"):
        coarse = rk4_second_order(qfun(grid), qfun(grid[:-1] + 0.5 * h), h, y0)
        fine_grid = np.linspace(x_min, x_max, 2 * n + 1)
        fine = rk4_second_order(qfun(fine_grid), qfun(fine_grid[:-1] + 0.25 * h), 0.5 * h, y0)
    if not (np.all(np.isfinite(coarse)) and np.all(np.isfinite(fine))):
        raise IntegrationFailure("Klein-Gordon integration produced non-finite values")
    fine = fine[::2]
    diff = fine - coarse
    scale = float(np.max(np.abs(fine)))
    richardson_error = float(np.max(np.abs(diff))) / 15.0 / scale
    if richardson_error > richardson_tol:
        raise IntegrationFailure(f"Richardson error estimate {richardson_error:.3e} exceeds {richardson_tol:.1e}; reduce step")
    values = fine + diff / 15.0

    th, dth, ph, dph = values.T
    w = dth * ph - th * dph
    drift = float(np.max(np.abs(w - w[0])) / abs(w[0]))
    if drift > wronskian_tol:
        raise WronskianDrift(f"Wronskian drift {drift:.3e} exceeds {wronskian_tol:.1e}")
    basis = NumericBasis(grid, values, qfun, richardson_error, drift)
    regions = {classify_region(p, pot, u, xi) for xi in grid[:: max(1, len(grid) // 256)]}
    if regions == {Region.ALLOWED}:
        basis.regime = Region.ALLOWED
    elif regions == {Region.FORBIDDEN}:
        basis.regime = Region.FORBIDDEN
    return basis


def basis_samples(basis: KGBasis, xs) -> np.ndarray:
    """Columns x, theta, theta', phi, phi', local Wronskian."""
    xs = np.asarray(xs, dtype=float)
    th, dth, ph, dph = basis.evaluate(xs)
    return np.column_stack((xs, th, dth, ph, dph, dth * ph - th * dph))
