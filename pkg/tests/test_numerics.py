import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from rqtraj import _numerics


def test_integrate_matches_scipy_quad():
    f = lambda x: 2.0 / (np.cos(x) ** 2 + 4 * np.sin(x) ** 2)
    ref, _ = quad(f, 0, 2.5, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert _numerics.integrate(f, 0, 2.5) == pytest.approx(ref, rel=1e-13)


def test_integrate_reversed_and_empty():
    assert _numerics.integrate(np.exp, 1, 0) == pytest.approx(1 - math.e, rel=1e-14)
    assert _numerics.integrate(np.exp, 2, 2) == 0.0


def test_integrate_peaked_integrand():
    # near-node slowness profile: sharp Lorentzian
    eps = 1e-3
    f = lambda x: eps / (x**2 + eps**2)
    assert _numerics.integrate(f, -1, 1) == pytest.approx(2 * math.atan(1 / eps), rel=1e-12)


@given(st.floats(0.1, 10), st.floats(-0.9, 0.9))
def test_bracketed_newton_cubic(scale, target):
    f = lambda x: scale * (x**3 + x) - scale * target
    df = lambda x: scale * (3 * x**2 + 1)
    root = _numerics.bracketed_newton(f, df, -1.0, 1.0, x0=0.0)
    assert abs(root**3 + root - target) <= 1e-12


def test_rk4_harmonic_oscillator():
    # psi'' = -psi on [0, 1] with step 1e-2
    n = 100
    h = 1.0 / n
    q_nodes = -np.ones(n + 1)
    q_mid = -np.ones(n)
    out = _numerics.rk4_second_order(q_nodes, q_mid, h, (0.0, 1.0))
    out = np.asarray(out)
    assert out[-1, 0] == pytest.approx(math.sin(1.0), abs=1e-9)


def test_wrap_to_pi():
    w = _numerics.wrap_to_pi(np.array([3 * math.pi / 2, -3 * math.pi / 2, 0.1]))
    np.testing.assert_allclose(w, [-math.pi / 2, math.pi / 2, 0.1], atol=1e-15)


def test_fit_order():
    h = np.array([1, 0.5, 0.25, 0.125])
    assert _numerics.fit_order(h, 3 * h**2) == pytest.approx(2.0)
