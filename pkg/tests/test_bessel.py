import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from bltp import bessel
from bltp.errors import UnsupportedOrder

# Frozen from a dense scan of [0, 200]; the scan is deterministic.
FROZEN_ENVELOPE = {1: 0.9643033568917048, 2: 0.9718095636865516, 3: 0.9860033261550439}
FROZEN_LIPSCHITZ = 0.9610622777970902


def _mp_series(n, x):
    """Independent high-precision power series for J_n."""
    with mpmath.workdps(50):
        x = mpmath.mpf(x)
        total, m = mpmath.mpf(0), 0
        while True:
            term = (-1) ** m / (mpmath.factorial(m) * mpmath.factorial(m + n)) * (x / 2) ** (2 * m + n)
            total += term
            if abs(term) < mpmath.mpf(10) ** -45 and m > x:
                return total
            m += 1


@pytest.mark.parametrize("n", [1, 2, 3])
def test_bessel_j_against_scipy(n):
    x = np.linspace(0.0, 300.0, 30001)
    got = bessel.bessel_j(n, x)
    ref = special.jv(n, x)
    assert np.max(np.abs(got - ref) / (1 + np.abs(ref))) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("x", [0.3, 5.0, 11.9, 12.1, 24.0, 26.0, 60.0])
def test_bessel_j_against_high_precision_series(n, x):
    assert abs(bessel.bessel_j(n, x) - float(_mp_series(n, x))) <= 1e-12 * (1 + abs(bessel.bessel_j(n, x)))


def test_bessel_j_at_zero_and_errors():
    assert bessel.bessel_j(1, 0.0) == 0.0
    assert bessel.bessel_j(2, 0.0) == 0.0
    with pytest.raises(UnsupportedOrder):
        bessel.bessel_j(4, 1.0)
    with pytest.raises(ValueError):
        bessel.bessel_j(1, -1.0)


def test_first_zero_of_j1():
    lo, hi = mpmath.mpf(3.5), mpmath.mpf(4.0)
    for _ in range(60):
        mid = (lo + hi) / 2
        if _mp_series(1, mid) > 0:
            lo = mid
        else:
            hi = mid
    oracle = float(lo)
    from scipy.optimize import brentq
    root = brentq(lambda x: bessel.bessel_j(1, x), 3.5, 4.0, xtol=1e-15)
    assert abs(root - oracle) < 1e-9
    assert abs(root - 3.8317059702) < 1e-9


def test_ratio_at_zero():
    assert bessel.jn_ratio(1, 0.0) == 0.5
    assert bessel.jn_ratio(2, 0.0) == 0.125
    assert bessel.jn_ratio(3, 0.0) == pytest.approx(1 / 48, rel=1e-15)
    assert bessel.jn_ratio(0, 0.0) == 1.0


def test_ratio_unsupported_order():
    with pytest.raises(UnsupportedOrder):
        bessel.jn_ratio(4, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_ratio_against_scipy(n):
    x = np.concatenate([np.geomspace(1e-6, 1, 200), np.linspace(1, 300, 3000)])
    ref = special.jv(n, x) / x**n
    got = bessel.jn_ratio(n, x)
    assert np.max(np.abs(got - ref)) < 1e-15 * 8


@given(st.floats(0.0, 1e-2))
def test_ratio_continuous_at_origin(x):
    assert abs(bessel.jn_ratio(2, x) - (1 / 8 - x * x / 96)) < 1e-10


def test_ratio_sq_matches():
    x = np.linspace(0, 50, 501)
    assert np.allclose(bessel.jn_ratio_sq(2, x * x), bessel.jn_ratio(2, x), rtol=0, atol=1e-16)


def test_kernel2_examples():
    assert bessel.kernel2(1.0, 0.0) == 0.125
    assert bessel.kernel2(2.0, 0.0) == 2.0
    D = np.linspace(0, 100, 1001)
    assert np.allclose(bessel.kernel2(1.5, D), 1.5**4 * special.jv(2, 1.5 * D) / np.where(D > 0, 1.5 * D, 1) ** 2
                       * (D > 0) + (D == 0) * 1.5**4 / 8, rtol=1e-12, atol=1e-16)


def test_kernel2_decay_envelope():
    D = np.linspace(0, 200, 20001)
    assert np.all(np.abs(bessel.kernel2(1.0, D)) <= FROZEN_ENVELOPE[2] / (1 + D * D) ** 1.25 * (1 + 1e-12))


@pytest.mark.parametrize("nu", [1, 2, 3])
def test_envelope_constants_frozen(nu):
    assert abs(bessel.decay_envelope_constant(nu) - FROZEN_ENVELOPE[nu]) < 1e-12
    assert bessel.decay_envelope_constant(nu) == bessel.decay_envelope_constant(nu)


def test_lipschitz_constant_frozen():
    assert abs(bessel.kernel_lipschitz_constant() - FROZEN_LIPSCHITZ) < 1e-12


@given(st.floats(0.0, 150.0), st.floats(0.0, 150.0))
def test_lipschitz_bound(x, y):
    g = lambda z: bessel.jn_ratio(2, z)
    bound = FROZEN_LIPSCHITZ * abs(x - y) / (1 + min(x, y) ** 2) ** 1.25
    assert abs(g(x) - g(y)) <= bound * (1 + 1e-9) + 1e-17


@pytest.mark.parametrize("n", [1, 2])
def test_derivative_identity(n):
    assert bessel.derivative_identity_error(n) < 1e-7
    x = np.linspace(0.1, 40, 400)
    h = 1e-5
    fd = (bessel.jn_ratio(n, x + h) - bessel.jn_ratio(n, x - h)) / (2 * h)
    exact = -special.jv(n + 1, x) / x**n
    assert np.max(np.abs(fd - exact) / np.abs(exact)) < 1e-6


def test_selftest_report():
    rep = bessel.selftest_report()
    assert rep["passed"]
    assert rep["ratio_at_zero"] == {"n1": 0.5, "n2": 0.125, "n3": 1 / 48}
    assert math.isclose(rep["kernel_lipschitz"], FROZEN_LIPSCHITZ, abs_tol=1e-12)
