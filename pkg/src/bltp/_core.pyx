# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Bessel ratios and the self-field history sums.

The algorithms mirror ``bessel.py`` branch for branch, so both backends
agree to rounding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, fabs, M_PI

cnp.import_array()

NAME = "cython"

cdef enum:
    SERIES_TERMS = 40
    MILLER_START = 80
    HANKEL_TERMS = 48

cdef double SERIES_SWITCH = 12.0
cdef double HANKEL_SWITCH = 25.0

cdef double _ha[2][HANKEL_TERMS]
cdef double _inv_fact[4]


cdef void _init_tables():
    cdef int nu, k
    cdef double mu
    for nu in range(2):
        mu = 4.0 * nu * nu
        _ha[nu][0] = 1.0
        for k in range(1, HANKEL_TERMS):
            _ha[nu][k] = _ha[nu][k - 1] * (mu - (2 * k - 1) * (2 * k - 1)) / (k * 8.0)
    _inv_fact[0] = 1.0
    _inv_fact[1] = 1.0
    _inv_fact[2] = 0.5
    _inv_fact[3] = 1.0 / 6.0


_init_tables()


cdef inline double _series(int n, double x) nogil:
    cdef long double y = 0.25 * (<long double> x) * x
    cdef long double term = _inv_fact[n]
    cdef long double total = term
    cdef int m
    for m in range(1, SERIES_TERMS):
        term = term * (-y) / (m * (m + n))
        total += term
        if fabs(<double> term) <= 1e-21 * fabs(<double> total):
            break
    return <double> (total / (1 << n))


cdef inline void _miller(double x, double* out) nogil:
    cdef double jp1 = 0.0, j = 1e-30, jm1, norm = 0.0
    cdef int k, i
    for k in range(MILLER_START, 0, -1):
        jm1 = (2.0 * k / x) * j - jp1
        jp1 = j
        j = jm1
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        if k - 1 <= 3:
            out[k - 1] = j
        if fabs(j) > 1e250:
            j *= 1e-250
            jp1 *= 1e-250
            norm *= 1e-250
            for i in range(k - 1, 4):
                if i >= 0:
                    out[i] *= 1e-250
    norm += out[0]
    for i in range(4):
        out[i] /= norm


cdef inline void _hankel(double x, double* out) nogil:
    cdef double inv = 1.0 / x
    cdef double z = -inv * inv
    cdef double P, Q, chi, pref
    cdef int nu, k
    pref = sqrt(2.0 / (M_PI * x))
    for nu in range(2):
        P = 0.0
        Q = 0.0
        for k in range(HANKEL_TERMS // 2 - 1, -1, -1):
            P = P * z + _ha[nu][2 * k]
            Q = Q * z + _ha[nu][2 * k + 1]
        Q *= inv
        chi = x - (0.5 * nu + 0.25) * M_PI
        out[nu] = pref * (P * cos(chi) - Q * sin(chi))
    out[2] = (2.0 / x) * out[1] - out[0]
    out[3] = (4.0 / x) * out[2] - out[1]


cdef inline double ratio(int n, double x) nogil:
    cdef double js[4]
    cdef double xn
    cdef int i
    x = fabs(x)
    if x <= SERIES_SWITCH:
        return _series(n, x)
    if x < HANKEL_SWITCH:
        _miller(x, js)
    else:
        _hankel(x, js)
    xn = 1.0
    for i in range(n):
        xn *= x
    return js[n] / xn


def ratio_array(int n, x):
    """Vectorised ``J_n(x)/x**n`` for ``n`` in 0..3."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    flat = arr.ravel()
    out = np.empty_like(flat)
    cdef double[::1] xv = flat
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = ratio(n, xv[i])
    return out.reshape(arr.shape)


def history_sums(double kappa, ks, t, q, v, base, corr):
    """Raw self-field sums at the grid nodes ``ks``; see ``_pycore.history_sums``."""
    cdef Py_ssize_t[::1] kv = np.ascontiguousarray(ks, dtype=np.intp)
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(base, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(corr, dtype=np.float64)
    cdef Py_ssize_t m = kv.shape[0]
    SE = np.zeros((m, 3))
    SB = np.zeros((m, 3))
    cdef double[:, ::1] se = SE
    cdef double[:, ::1] sb = SB
    cdef Py_ssize_t i, j, k, nc = cv.shape[0]
    cdef double dt, d0, d1, d2, dd, w, g, e0, e1, e2, b0, b1, b2
    with nogil:
        for i in range(m):
            k = kv[i]
            e0 = e1 = e2 = b0 = b1 = b2 = 0.0
            for j in range(k + 1):
                dt = tv[k] - tv[j]
                d0 = qv[k, 0] - qv[j, 0]
                d1 = qv[k, 1] - qv[j, 1]
                d2 = qv[k, 2] - qv[j, 2]
                dd = dt * dt - (d0 * d0 + d1 * d1 + d2 * d2)
                if dd < 0.0:
                    dd = 0.0
                g = ratio(2, kappa * sqrt(dd))
                w = bv[j]
                if k - j < nc:
                    w = w + cv[k - j]
                g = g * w
                e0 += g * (d0 - vv[j, 0] * dt)
                e1 += g * (d1 - vv[j, 1] * dt)
                e2 += g * (d2 - vv[j, 2] * dt)
                b0 += g * (vv[j, 1] * d2 - vv[j, 2] * d1)
                b1 += g * (vv[j, 2] * d0 - vv[j, 0] * d2)
                b2 += g * (vv[j, 0] * d1 - vv[j, 1] * d0)
            se[i, 0] = e0
            se[i, 1] = e1
            se[i, 2] = e2
            sb[i, 0] = b0
            sb[i, 1] = b1
            sb[i, 2] = b2
    return SE, SB
