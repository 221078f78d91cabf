r"""Bessel functions of the first kind of low integer order.

The kernels of the retarded integrals only ever need :math:`J_n(x)/x^n`,
which is an even entire function.  Three evaluation branches are used:

* ``x <= 12``: the power series
  :math:`J_n(x)/x^n = 2^{-n}\sum_m (-x^2/4)^m / (m!\,(m+n)!)`.
* ``12 < x < 25``: Miller's backward recurrence, normalised with
  :math:`J_0 + 2\sum_k J_{2k} = 1`.
* ``x >= 25``: the Hankel asymptotic expansion for :math:`J_0, J_1`, followed
  by upward recurrence (stable for ``x > n``).

All three reach roughly 1e-15 absolute accuracy on their range.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import UnsupportedOrder

SERIES_SWITCH = 12.0
HANKEL_SWITCH = 25.0
_SERIES_TERMS = 40
_MILLER_START = 80
_HANKEL_TERMS = 48


def _check_order(n, allowed=(0, 1, 2, 3)):
    if n not in allowed:
        raise UnsupportedOrder(f"Bessel order {n!r} not in {allowed}")


def _ratio_series(n, y):
    """``J_n(x)/x^n`` as a series in ``y = x^2/4``.

    Accumulated in extended precision: near x = 12 the terms reach ~1e3
    and the sum cancels to O(1e-2).
    """
    y = np.asarray(y, dtype=np.longdouble)
    term = np.full_like(y, 1.0) / math.factorial(n)
    total = term.copy()
    for m in range(1, _SERIES_TERMS):
        term = term * (-y) / (m * (m + n))
        total += term
        if np.all(np.abs(term) <= 1e-21 * np.abs(total)):
            break
    return (total * 2.0**-n).astype(float)


def _miller(x):
    """J_0..J_3 by backward recurrence; ``x`` must be well away from 0."""
    jp1 = np.zeros_like(x)
    j = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    low = [None] * 4
    for k in range(_MILLER_START, 0, -1):
        jm1 = (2.0 * k / x) * j - jp1
        jp1, j = j, jm1
        # j now holds the unnormalised J_{k-1}
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        if k - 1 <= 3:
            low[k - 1] = j.copy()
        big = np.abs(j) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j *= scale
            jp1 *= scale
            norm *= scale
            for i in range(4):
                if low[i] is not None:
                    low[i] *= scale
    norm += low[0]
    return [low[i] / norm for i in range(4)]


def _hankel_coeffs(nu):
    mu = 4.0 * nu * nu
    a = [1.0]
    for k in range(1, _HANKEL_TERMS):
        a.append(a[-1] * (mu - (2 * k - 1) ** 2) / (k * 8.0))
    return np.array(a)


_HANKEL = (_hankel_coeffs(0), _hankel_coeffs(1))


def _hankel_j0_j1(x):
    out = []
    inv = 1.0 / x
    for nu in (0, 1):
        a = _HANKEL[nu]
        P = np.zeros_like(x)
        Q = np.zeros_like(x)
        # Horner in 1/x^2, alternating signs
        for k in range(_HANKEL_TERMS // 2 - 1, -1, -1):
            P = P * (-inv * inv) + a[2 * k]
            Q = Q * (-inv * inv) + a[2 * k + 1]
        Q *= inv
        chi = x - (0.5 * nu + 0.25) * math.pi
        out.append(np.sqrt(2.0 / (math.pi * x)) * (P * np.cos(chi) - Q * np.sin(chi)))
    return out


def _large_x_all(x):
    """J_0..J_3 for ``x > SERIES_SWITCH``."""
    res = [np.empty_like(x) for _ in range(4)]
    mid = x < HANKEL_SWITCH
    if np.any(mid):
        for r, v in zip(res, _miller(x[mid])):
            r[mid] = v
    hi = ~mid
    if np.any(hi):
        xh = x[hi]
        j0, j1 = _hankel_j0_j1(xh)
        j2 = (2.0 / xh) * j1 - j0
        j3 = (4.0 / xh) * j2 - j1
        for r, v in zip(res, (j0, j1, j2, j3)):
            r[hi] = v
    return res


def _ratio_array(n, x):
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x <= SERIES_SWITCH
    if np.any(small):
        xs = x[small]
        out[small] = _ratio_series(n, 0.25 * xs * xs)
    if not np.all(small):
        xl = x[~small]
        out[~small] = _large_x_all(xl)[n] / xl**n
    return out


def jn_ratio(n, x):
    """Return ``J_n(x) / x**n``, continuous at 0 where it equals ``1/(2**n n!)``."""
    _check_order(n)
    x = np.asarray(x, dtype=float)
    out = _ratio_array(n, np.atleast_1d(x))
    return out.reshape(x.shape) if x.ndim else float(out[0])


def jn_ratio_sq(n, x2):
    """``J_n(x)/x**n`` as a function of ``x2 = x**2``; negative round-off is clipped."""
    x2 = np.maximum(np.asarray(x2, dtype=float), 0.0)
    return jn_ratio(n, np.sqrt(x2))


def bessel_j(n, x):
    """Bessel function of the first kind ``J_n(x)`` for ``n`` in {1, 2, 3}, ``x >= 0``."""
    _check_order(n, (1, 2, 3))
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("bessel_j is defined here for x >= 0 only")
    x1 = np.atleast_1d(xa)
    out = np.empty_like(x1)
    small = x1 <= SERIES_SWITCH
    if np.any(small):
        xs = x1[small]
        out[small] = _ratio_series(n, 0.25 * xs * xs) * xs**n
    if not np.all(small):
        out[~small] = _large_x_all(x1[~small])[n]
    return out.reshape(xa.shape) if xa.ndim else float(out[0])


def kernel2(kappa, D):
    """Memory kernel ``kappa**2 J_2(kappa D) / D**2``, equal to ``kappa**4 / 8`` at ``D = 0``."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return kappa**4 * jn_ratio(2, kappa * np.asarray(D, dtype=float))


# ---------------------------------------------------------------------------
# envelope constants

ENVELOPE_XMAX = 200.0
ENVELOPE_SAMPLES = 400_001


def _envelope_grid():
    return np.linspace(0.0, ENVELOPE_XMAX, ENVELOPE_SAMPLES)


def decay_envelope_constant(nu):
    """Smallest C with ``|J_nu(x)|/x**nu <= C / (1+x**2)**(nu/2 + 1/4)`` on a dense grid of [0, 200]."""
    x = _envelope_grid()
    vals = np.abs(jn_ratio(nu, x)) * (1.0 + x * x) ** (0.5 * nu + 0.25)
    return float(np.max(vals))


def kernel_lipschitz_constant():
    r"""Constant C with :math:`|g(x)-g(y)| \le C |x-y| / (1+\min(x,y)^2)^{5/4}`, ``g = J_2(x)/x^2``.

    By the mean value theorem and ``g' = -J_3(x)/x^2`` it suffices to bound
    ``|x J_3(x)/x^3| (1+x^2)^{5/4}``, which is scanned on the envelope grid.
    """
    x = _envelope_grid()
    vals = x * np.abs(jn_ratio(3, x)) * (1.0 + x * x) ** 1.25
    return float(np.max(vals))


def derivative_identity_error(n, x=None, step=1e-3):
    """Largest relative gap between a five-point derivative of ``J_n(x)/x^n`` and ``-J_{n+1}(x)/x^n``."""
    if n not in (1, 2):
        raise UnsupportedOrder(f"derivative identity checked for n in (1, 2), got {n}")
    x = np.linspace(0.1, 40.0, 800) if x is None else np.asarray(x, dtype=float)
    f = lambda y: jn_ratio(n, y)
    fd = (f(x - 2 * step) - 8 * f(x - step) + 8 * f(x + step) - f(x + 2 * step)) / (12 * step)
    exact = -x * jn_ratio(n + 1, x)
    return float(np.max(np.abs(fd - exact) / np.abs(exact)))


def selftest_report():
    """Fitted envelope constants and identity checks, as emitted by ``bessel-selftest``."""
    deriv = {f"n{n}": derivative_identity_error(n) for n in (1, 2)}
    zeros = {f"n{n}": jn_ratio(n, 0.0) for n in (1, 2, 3)}
    passed = (max(deriv.values()) < 1e-7
              and zeros == {"n1": 0.5, "n2": 0.125, "n3": 1.0 / 48.0})
    return {
        "derivative_identity": deriv,
        "passed": bool(passed),
        "decay_envelope": {f"C{nu}": decay_envelope_constant(nu) for nu in (1, 2, 3)},
        "kernel2_envelope": decay_envelope_constant(2),
        "kernel_lipschitz": kernel_lipschitz_constant(),
        "ratio_at_zero": {f"n{n}": jn_ratio(n, 0.0) for n in (1, 2, 3)},
        "grid": {"x_max": ENVELOPE_XMAX, "samples": ENVELOPE_SAMPLES},
        "series_switch": SERIES_SWITCH,
        "hankel_switch": HANKEL_SWITCH,
    }
