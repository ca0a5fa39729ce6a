"""Small numerical kernels: vectorised adaptive quadrature, a safeguarded
Newton solver and a fixed-step RK4 propagator for psi'' = q(x) psi."""

from __future__ import annotations

import math

import numpy as np

from .errors import IntegrationFailure, RootBracketFailure

_GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


def _gauss(f, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return half * float(np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES)))


def _gauss_halves(f, lo, hi):
    mid = 0.5 * (lo + hi)
    quarter = 0.25 * (hi - lo)
    nodes = np.concatenate((0.5 * (lo + mid) + quarter * _GL_NODES, 0.5 * (mid + hi) + quarter * _GL_NODES))
    vals = np.asarray(f(nodes), dtype=float)
    left = quarter * float(np.dot(_GL_WEIGHTS, vals[:_GL_ORDER]))
    right = quarter * float(np.dot(_GL_WEIGHTS, vals[_GL_ORDER:]))
    return left, right


def integrate(f, lo: float, hi: float, abstol: float = 1e-13, reltol: float = 1e-13, max_intervals: int = 4096) -> float:
    """Adaptive Gauss-Legendre quadrature of a vectorised ``f`` on [lo, hi].

    Each interval is accepted once the 16-point rule on the whole interval
    agrees with the sum over its two halves.
    """
    if lo == hi:
        return 0.0
    if hi < lo:
        return -integrate(f, hi, lo, abstol, reltol, max_intervals)
    length = hi - lo
    total = 0.0
    stack = [(lo, hi, _gauss(f, lo, hi))]
    accepted = 0
    while stack:
        a, b, whole = stack.pop()
        left, right = _gauss_halves(f, a, b)
        refined = left + right
        if not math.isfinite(refined):
            raise IntegrationFailure(f"non-finite integrand on [{a}, {b}]")
        err = abs(refined - whole)
        if err <= max(abstol * (b - a) / length, reltol * abs(refined)) or (b - a) <= 1e-15 * length:
            total += refined
            accepted += 1
            continue
        if accepted + len(stack) > max_intervals:
            raise IntegrationFailure("quadrature exceeded its interval budget")
        mid = 0.5 * (a + b)
        stack.append((mid, b, right))
        stack.append((a, mid, left))
    return total


def bracketed_newton(f, df, lo: float, hi: float, x0: float | None = None, ftol: float = 1e-13, xtol: float = 1e-15, maxiter: int = 200) -> float:
    """Root of an increasing function ``f`` on [lo, hi] with f(lo) < 0 < f(hi).

    Newton steps using the exact derivative ``df``; a step leaving the current
    bracket or failing to halve it is replaced by bisection.
    """
    x = 0.5 * (lo + hi) if x0 is None or not (lo < x0 < hi) else x0
    width = hi - lo
    for _ in range(maxiter):
        fx = f(x)
        if abs(fx) <= ftol:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        step = fx / df(x)
        cand = x - step
        if not (lo < cand < hi) or abs(step) > 0.5 * width:
            cand = 0.5 * (lo + hi)
        width = hi - lo
        if abs(cand - x) <= xtol * max(1.0, abs(x)) or width <= xtol * max(1.0, abs(x)):
            return cand
        x = cand
    raise RootBracketFailure(f"no convergence in {maxiter} iterations on [{lo}, {hi}]")


def rk4_second_order(q_nodes: np.ndarray, q_mid: np.ndarray, h: float, y0: tuple) -> np.ndarray:
    """Propagate psi'' = q psi for the initial states in ``y0``.

    ``y0`` holds pairs (psi, psi') for each solution, flattened. ``q_nodes``
    has length n+1 (grid), ``q_mid`` length n (midpoints). Returns an array of
    shape (n+1, len(y0)).
    """
    n = len(q_mid)
    m = len(y0) // 2
    out = np.empty((n + 1, 2 * m))
    out[0] = y0
    state = [float(v) for v in y0]
    h2 = 0.5 * h
    for i in range(n):
        qa, qm, qb = q_nodes[i], q_mid[i], q_nodes[i + 1]
        for j in range(m):
            p, dp = state[2 * j], state[2 * j + 1]
            k1p, k1d = dp, qa * p
            k2p, k2d = dp + h2 * k1d, qm * (p + h2 * k1p)
            k3p, k3d = dp + h2 * k2d, qm * (p + h2 * k2p)
            k4p, k4d = dp + h * k3d, qb * (p + h * k3p)
            state[2 * j] = p + h * (k1p + 2 * k2p + 2 * k3p + k4p) / 6
            state[2 * j + 1] = dp + h * (k1d + 2 * k2d + 2 * k3d + k4d) / 6
        out[i + 1] = state
    return out


def wrap_to_pi(angle):
    """Map angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2 * np.pi)


def fit_order(params, values) -> float:
    """Least-squares slope of log(values) against log(params)."""
    params = np.asarray(params, dtype=float)
    values = np.asarray(values, dtype=float)
    slope, _ = np.polyfit(np.log(params), np.log(values), 1)
    return float(slope)
