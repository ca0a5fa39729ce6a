"""Reduced action S0 = hbar * arctan(a theta/phi + b) and the quantities built
from it: conjugate momentum, f-function, quantum coordinate, Schwarzian
derivative and the relativistic quantum stationary Hamilton-Jacobi residual.

Derivatives are closed-form. With D = phi^2 + (a theta + b phi)^2,

    P   = hbar a W / D
    P'  = -P D'/D
    P'' =  P (2 D'^2/D^2 - D''/D),   D'' = 2 phi'^2 + 2 (a theta' + b phi')^2 + 2 q D,

where q is the Klein-Gordon coefficient (psi'' = q psi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _numerics
from .errors import BasisDegenerate, DegenerateEnergy, DegeneratePath
from .kleingordon import KGBasis
from .model import DEFAULT_DEGENERACY_TOL, Microstate, ParticleSpec, Potential, UnitSystem, energy_gap


@dataclass(frozen=True)
class ActionState:
    """S0 and its first three x-derivatives at ``x`` (scalars or arrays)."""

    x: object
    S0: object
    P: object
    d2S0: object
    d3S0: object


def reduced_action(basis: KGBasis, ms: Microstate, u: UnitSystem, x) -> ActionState:
    a, b = ms.a, ms.b
    th, dth, ph, dph = basis.evaluate(x)
    mix = a * th + b * ph
    dmix = a * dth + b * dph
    D = ph**2 + mix**2
    if np.any(D == 0):
        raise BasisDegenerate("theta and phi vanish together")
    dD = 2 * (ph * dph + mix * dmix)
    d2D = 2 * (dph**2 + dmix**2) + 2 * basis.q(x) * D
    P = u.hbar * a * basis.wronskian / D
    d2S0 = -P * dD / D
    d3S0 = P * (2 * (dD / D) ** 2 - d2D / D)
    S0 = u.hbar * basis.phase(a, b, x)
    return ActionState(x, S0, P, d2S0, d3S0)


def conjugate_momentum(basis: KGBasis, ms: Microstate, u: UnitSystem, x):
    th, _, ph, _ = basis.evaluate(x)
    return u.hbar * ms.a * basis.wronskian / (ph**2 + (ms.a * th + ms.b * ph) ** 2)


def _require_nondegenerate(p, pot, u, x, tol):
    gap = energy_gap(p, pot, u, x)
    if np.any(np.abs(gap) <= tol):
        raise DegenerateEnergy(f"(E - V)^2 = m0^2 c^4 within {tol:g} at x = {x!r}")
    return gap


def f_function(basis: KGBasis, ms: Microstate, p: ParticleSpec, pot: Potential, u: UnitSystem, x, tol: float = DEFAULT_DEGENERACY_TOL):
    """f = c^2 P^2 / [m0^2 c^4 - (E - V)^2], with the denominator as printed.

    This is negative in classically allowed regions. See :func:`f_sign_audit`.
    """
    gap = _require_nondegenerate(p, pot, u, x, tol)
    P = conjugate_momentum(basis, ms, u, x)
    return u.c**2 * P**2 / (-gap)


def f_magnitude(basis, ms, p, pot, u, x, tol: float = DEFAULT_DEGENERACY_TOL):
    return np.abs(f_function(basis, ms, p, pot, u, x, tol))


def f_sign_audit(basis, ms, p, pot, u, x, tol: float = DEFAULT_DEGENERACY_TOL) -> dict:
    """Compare the sign of the printed f with the sign obtained from
    P^2/f = [(E-V)^2 - m0^2 c^4]/c^2 (positive in allowed regions)."""
    f = np.atleast_1d(f_function(basis, ms, p, pot, u, x, tol))
    gap = np.atleast_1d(energy_gap(p, pot, u, x))
    from_hamiltonian = u.c**2 * np.atleast_1d(conjugate_momentum(basis, ms, u, x)) ** 2 / gap
    agree = np.sign(f) == np.sign(from_hamiltonian)
    return {
        "printed_sign": np.sign(f).astype(int).tolist(),
        "hamiltonian_sign": np.sign(from_hamiltonian).astype(int).tolist(),
        "consistent": bool(np.all(agree)),
        "magnitudes_equal": bool(np.allclose(np.abs(f), np.abs(from_hamiltonian), rtol=1e-14, atol=0)),
    }


def quantum_coordinate_rate(basis, ms, p, pot, u, x):
    """d x_hat / dx = c P / sqrt((E - V)^2 - m0^2 c^4)."""
    gap = energy_gap(p, pot, u, x)
    return u.c * conjugate_momentum(basis, ms, u, x) / np.sqrt(gap)


def _check_path(p, pot, u, lo, hi, tol, samples=129):
    xs = np.linspace(lo, hi, samples)
    gap = energy_gap(p, pot, u, xs)
    if np.any(gap <= tol):
        raise DegeneratePath(f"path [{lo}, {hi}] leaves the allowed region or touches the degenerate band")


def quantum_coordinate(basis, ms, p, pot, u, x_ref: float, x: float, tol: float = 1e-13, deg_tol: float = DEFAULT_DEGENERACY_TOL) -> float:
    """Relativistic quantum coordinate x_hat(x) = int_{x_ref}^{x} c P / sqrt((E-V)^2 - m0^2 c^4) dx'."""
    if x == x_ref:
        return 0.0
    _check_path(p, pot, u, min(x_ref, x), max(x_ref, x), deg_tol)
    return _numerics.integrate(lambda s: quantum_coordinate_rate(basis, ms, p, pot, u, s), x_ref, x, abstol=tol, reltol=tol)


def schwarzian_of_action(state: ActionState):
    """{S0; x} = S0'''/S0' - (3/2) (S0''/S0')^2."""
    return state.d3S0 / state.P - 1.5 * (state.d2S0 / state.P) ** 2


def rqshje_cleared(state: ActionState, p: ParticleSpec, pot: Potential, u: UnitSystem, x):
    """Hamilton-Jacobi residual multiplied through by 2 m0 c^2 (regular at m0 = 0):
    c^2 P^2 + (hbar c)^2/2 {S0; x} + m0^2 c^4 - (E - V)^2."""
    return (
        u.c**2 * state.P**2
        + 0.5 * (u.hbar * u.c) ** 2 * schwarzian_of_action(state)
        - energy_gap(p, pot, u, x)
    )


def rqshje_residual(state: ActionState, p: ParticleSpec, pot: Potential, u: UnitSystem, x):
    """Residual of the relativistic quantum stationary Hamilton-Jacobi equation.

    For m0 > 0 this is the equation in its energy form (divided by 2 m0);
    for a photon the m0-cleared form :func:`rqshje_cleared` is returned.
    """
    cleared = rqshje_cleared(state, p, pot, u, x)
    if p.m0 == 0:
        return cleared
    return cleared / (2 * p.m0 * u.c**2)


def rqshje_residual_scaled(state, p, pot, u, x):
    """Cleared residual divided by (E - V)^2 + m0^2 c^4 (dimensionless)."""
    eps = p.E - pot.value(x)
    return rqshje_cleared(state, p, pot, u, x) / (eps**2 + p.rest_energy(u) ** 2)


def action_table(basis, ms, p, pot, u, xs, tol: float = DEFAULT_DEGENERACY_TOL) -> dict:
    """Diagnostic columns x, S0, P, d2S0, d3S0, f, residual (scaled)."""
    xs = np.asarray(xs, dtype=float)
    st = reduced_action(basis, ms, u, xs)
    return {
        "x": xs,
        "S0": st.S0,
        "P": st.P,
        "d2S0": st.d2S0,
        "d3S0": st.d3S0,
        "f": f_function(basis, ms, p, pot, u, xs, tol),
        "residual": rqshje_residual_scaled(st, p, pot, u, xs),
    }
