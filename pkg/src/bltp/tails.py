r"""History integrals over an inertial past, in closed form.

In the rest frame of the past motion, with the field point at spatial
distance ``r`` and ``w = sqrt(s**2 - r**2)`` for the time lag ``s``, every
tail integral reduces to one of

.. math::

    I_A(w_0) = \int_{w_0}^\infty \frac{J_1(\kappa w)}{\sqrt{w^2+r^2}}\,dw, \quad
    I_F(w_0) = \int_{w_0}^\infty \frac{J_2(\kappa w)}{w\sqrt{w^2+r^2}}\,dw, \quad
    I_3(w_0) = \int_{w_0}^\infty \frac{J_3(\kappa w)}{w^2\sqrt{w^2+r^2}}\,dw,

or to an elementary Bessel ratio.  The complete integrals (``w0 = 0``) are
products ``I_{nu/2}(z) K_{nu/2}(z)`` with ``z = kappa r / 2``; finite lower
limits subtract a Gauss-Kronrod integral over ``[0, w0]``.  Nothing is
truncated.
"""

from __future__ import annotations

import numpy as np

from . import _backend
from .errors import TailBoundExceeded
from .quadrature import adaptive_gk, split_interval

_SERIES_Z = 2.0


def _spherical_i(n, z):
    """``e^{-z} i_n(z)`` for the modified spherical Bessel function ``i_n``, n in {0,1,2}."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < _SERIES_Z
    if np.any(small):
        zs = z[small]
        y = 0.5 * zs * zs
        dfact = float(np.prod(np.arange(2 * n + 1, 0, -2)))
        term = np.full_like(zs, 1.0 / dfact)
        total = term.copy()
        for k in range(1, 30):
            term = term * y / (k * (2 * n + 2 * k + 1))
            total += term
        out[small] = zs**n * total * np.exp(-zs)
    if not np.all(small):
        zl = z[~small]
        e2 = np.exp(-2.0 * zl)
        sh = 0.5 * (1.0 - e2)
        ch = 0.5 * (1.0 + e2)
        if n == 0:
            val = sh / zl
        elif n == 1:
            val = (ch - sh / zl) / zl
        else:
            val = ((1.0 + 3.0 / zl**2) * sh - (3.0 / zl) * ch) / zl
        out[~small] = val
    return out


def bessel_ik_product(nu, z):
    """``I_{nu/2}(z) K_{nu/2}(z)`` for odd ``nu`` in {1, 3, 5}; equals ``1/nu`` at 0."""
    z = np.asarray(z, dtype=float)
    n = (nu - 1) // 2
    out = np.full_like(z, 1.0 / nu)
    pos = z > 0
    if np.any(pos):
        zp = z[pos]
        iz = 1.0 / zp
        poly = (np.ones_like(zp), 1.0 + iz, 1.0 + 3.0 * iz + 3.0 * iz * iz)[n]
        out[pos] = _spherical_i(n, zp) * poly
    return out


def complete_integrals(kappa, r):
    """``(I_A, I_F, I_3)`` with lower limit 0."""
    r = np.asarray(r, dtype=float)
    x = kappa * r
    IA = np.where(x > 1e-8, -np.expm1(-x) / np.where(x > 0, x, 1.0), 1.0 - 0.5 * x)
    z = 0.5 * x
    P1, P3, P5 = (bessel_ik_product(nu, z) for nu in (1, 3, 5))
    IF = 0.25 * kappa * (P1 + P3)
    I3 = kappa**2 * (P1 / 24.0 + P3 / 16.0 + P5 / 48.0)
    return IA, IF, I3


def _head_integrands(kappa, r):
    def f(w, owner):
        rr = r[owner]
        rho = np.sqrt(w * w + rr * rr)
        ratio = np.where(rho > 0, w / np.where(rho > 0, rho, 1.0), 1.0)
        x = kappa * w
        out = np.empty((w.size, 3))
        out[:, 0] = kappa * ratio * _backend.ratio_array(1, x)
        out[:, 1] = kappa**2 * ratio * _backend.ratio_array(2, x)
        out[:, 2] = kappa**3 * ratio * _backend.ratio_array(3, x)
        return out
    return f


def tail_integrals(kappa, r, w0, tol=1e-12):
    """``(I_A, I_F, I_3)`` over ``[w0, inf)`` for arrays ``r``, ``w0``; plus an error bound.

    Raises
    ------
    TailBoundExceeded
        If the head quadrature cannot certify ``tol``.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    IA, IF, I3 = complete_integrals(kappa, r)
    err = np.zeros(r.size)
    need = np.flatnonzero(w0 > 0)
    if need.size:
        cap = 0.5 * np.pi / kappa
        los, his, owners = [], [], []
        for slot, i in enumerate(need):
            lo, hi = split_interval(0.0, w0[i], cap)
            # resolve the 1/sqrt(w^2 + r^2) knee explicitly for tiny r
            if 0 < r[i] < 0.25 * cap and w0[i] > r[i]:
                lo, hi = _refine_head(lo, hi, r[i])
            los.append(lo)
            his.append(hi)
            owners.append(np.full(lo.size, slot))
        head, herr = adaptive_gk(
            _head_integrands(kappa, r[need]), np.concatenate(los), np.concatenate(his),
            np.concatenate(owners), need.size, 3, tol)
        if np.any(herr > 10 * tol):
            raise TailBoundExceeded(f"tail head quadrature error {herr.max():.3e} exceeds {tol:.1e}")
        IA = IA.copy()
        IF = IF.copy()
        I3 = I3.copy()
        IA[need] -= head[:, 0]
        IF[need] -= head[:, 1]
        I3[need] -= head[:, 2]
        err[need] = herr
    return IA, IF, I3, err


def _refine_head(lo, hi, r):
    edges = np.concatenate([lo, hi[-1:]])
    extra = r * np.array([0.25, 1.0, 4.0])
    extra = extra[extra < edges[-1]]
    edges = np.unique(np.concatenate([edges, extra]))
    return edges[:-1], edges[1:]


def rest_tail(kappa, xr, tol=1e-12):
    """Tail integrals for field points given in the rest frame of the past motion.

    ``xr`` has shape (m, 4): the field point relative to the last event of the
    inertial epoch, so the particle sits at the origin for times ``<= 0``.

    Returns a dict of rest-frame quantities (no charge factor):

    ``QA`` (m,4)
        ``kappa^2 int J1(kD)/(kD) U^a dt``
    ``QE``, ``QB`` (m,3)
        electric and magnetic parts of ``kappa^4 int J2(kD)/(kD)^2 R_[c U_a] dt``
    ``Qg`` (m,)
        ``kappa^2 int J2(kD)/(kD)^2 (R.U) dt``
    ``Q3`` (m,4,4,4)
        ``kappa^4 int J3(kD)/(kD)^3 R_c R^[a U^b] dt`` indexed ``[c, a, b]``
    ``Q2`` (m,4)
        ``kappa^2 int J2(kD)/(kD)^2 U^b dt``
    ``err`` (m,)
    """
    xr = np.atleast_2d(np.asarray(xr, dtype=float))
    m = xr.shape[0]
    rvec = xr[:, 1:]
    r = np.linalg.norm(rvec, axis=1)
    s0 = np.maximum(xr[:, 0], r)
    w0 = np.sqrt(np.maximum(s0 * s0 - r * r, 0.0))
    IA, IF, I3, err = tail_integrals(kappa, r, w0, tol)
    k2w = _backend.ratio_array(2, kappa * w0)
    k1w = _backend.ratio_array(1, kappa * w0)

    QA = np.zeros((m, 4))
    QA[:, 0] = kappa * IA
    QE = -(kappa**2) * IF[:, None] * rvec
    QB = np.zeros((m, 3))
    Qg = -k1w
    Q3 = np.zeros((m, 4, 4, 4))
    Q3[:, 0, 1:, 0] = -(kappa**2) * k2w[:, None] * rvec
    Q3[:, 1:, 1:, 0] = kappa * I3[:, None, None] * rvec[:, None, :] * rvec[:, :, None]
    Q3[:, :, 0, 1:] = -Q3[:, :, 1:, 0]
    Q2 = np.zeros((m, 4))
    Q2[:, 0] = IF
    return {"QA": QA, "QE": QE, "QB": QB, "Qg": Qg, "Q3": Q3, "Q2": Q2, "err": err}
