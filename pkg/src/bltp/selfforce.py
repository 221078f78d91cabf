"""History-dependent self-force.

Two independent evaluations of the same physics:

* :func:`self_eb` integrates the 3+1 self-fields in coordinate time,
* :func:`self_force_four` integrates the covariant worldline form with the
  proper-time measure ``dtau' = dt'/gamma'``.

Both take their inertial-past contribution from :mod:`bltp.tails`; only the
sampled-history quadratures differ.  Agreement of the two is a consistency
check, not a tautology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import TailBoundExceeded
from .geometry import boost, four_velocity, lower, minkowski_dot, raise_tensor
from .quadrature import adaptive_gk, split_interval
from .tails import rest_tail

DEFAULT_TOL = 1e-11


@dataclass(frozen=True)
class SelfFieldEB:
    t: float
    E_self: np.ndarray
    B_self: np.ndarray


@dataclass(frozen=True)
class SelfForceSample:
    tau: float
    t: float
    f: np.ndarray


def _tail_tensor(p, X, tol):
    """Covariant self-field tensor from the inertial past, shape (m, 4, 4), charge included."""
    w = p.worldline
    L = boost(w.v_past)
    origin = np.concatenate([[w.t_start], w.q_start])
    tail = rest_tail(p.kappa, (X - origin) @ L.T, tol=tol)
    if np.any(tail["err"] > tol):
        raise TailBoundExceeded(f"inertial-past tail error {tail['err'].max():.3e} exceeds {tol:.1e}")
    m = X.shape[0]
    F = np.zeros((m, 4, 4))
    E, B = tail["QE"], tail["QB"]
    F[:, 1:, 0] = E
    F[:, 0, 1:] = -E
    F[:, 2, 3], F[:, 3, 2] = B[:, 0], -B[:, 0]
    F[:, 3, 1], F[:, 1, 3] = B[:, 1], -B[:, 1]
    F[:, 1, 2], F[:, 2, 1] = B[:, 2], -B[:, 2]
    return p.charge * np.einsum("ca,mcd,db->mab", L, F, L)


def _panels(w, ts, kappa):
    cap = 0.5 * np.pi / kappa
    los, his, own = [], [], []
    live = np.flatnonzero(ts > w.t_start)
    for slot, i in enumerate(live):
        lo, hi = split_interval(w.t_start, ts[i], cap)
        los.append(lo)
        his.append(hi)
        own.append(np.full(lo.size, slot))
    if not live.size:
        return live, np.empty(0), np.empty(0), np.empty(0, dtype=np.intp)
    return live, np.concatenate(los), np.concatenate(his), np.concatenate(own)


def self_eb_batch(p, ts, tol=DEFAULT_TOL):
    """Self-fields ``(E, B)`` at the coordinate times ``ts``; arrays of shape (m, 3)."""
    w = p.worldline
    kappa, e = p.kappa, p.charge
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    qt, _, _ = w.evaluate(ts)
    E = np.zeros((ts.size, 3))
    B = np.zeros((ts.size, 3))
    live, lo, hi, own = _panels(w, ts, kappa)
    if live.size:
        tl, ql = ts[live], qt[live]

        def integrand(tp, owner):
            q, v, _ = w.evaluate(tp)
            dt = tl[owner] - tp
            dq = ql[owner] - q
            d2 = np.maximum(dt * dt - np.einsum("ij,ij->i", dq, dq), 0.0)
            G = _backend.ratio_array(2, kappa * np.sqrt(d2))[:, None]
            return np.concatenate([G * (dq - v * dt[:, None]), G * np.cross(v, dq)], axis=1)

        vals, _ = adaptive_gk(integrand, lo, hi, own, live.size, 6, tol / max(abs(e) * kappa**4, 1e-300))
        E[live] = -e * kappa**4 * vals[:, :3]
        B[live] = -e * kappa**4 * vals[:, 3:]
    X = np.column_stack([ts, qt])
    Ft = _tail_tensor(p, X, tol)
    E += Ft[:, 1:, 0]
    B += np.column_stack([Ft[:, 2, 3], Ft[:, 3, 1], Ft[:, 1, 2]])
    return E, B


def self_eb(p, t, tol=DEFAULT_TOL):
    """3+1 self-fields at coordinate time ``t``."""
    E, B = self_eb_batch(p, [t], tol)
    return SelfFieldEB(float(t), E[0], B[0])


def self_force_four_batch(p, ts, tol=DEFAULT_TOL):
    """Covariant self four-force at coordinate times ``ts``; shape (m, 4)."""
    w = p.worldline
    kappa, e = p.kappa, p.charge
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    qt, vt, _ = w.evaluate(ts)
    u = four_velocity(vt)
    f = np.zeros((ts.size, 4))
    live, lo, hi, own = _panels(w, ts, kappa)
    if live.size:
        xl = np.column_stack([ts[live], qt[live]])
        ul = u[live]

        def integrand(tp, owner):
            q, v, _ = w.evaluate(tp)
            up = four_velocity(v)
            R = xl[owner].copy()
            R[:, 0] -= tp
            R[:, 1:] -= q
            D2 = np.maximum(-minkowski_dot(R, R), 0.0)
            G = _backend.ratio_array(2, kappa * np.sqrt(D2))
            uo = ul[owner]
            # (R^a u'^b - R^b u'^a) u_b, with dtau' = dt' / gamma'
            bracket = R * minkowski_dot(up, uo)[:, None] - up * minkowski_dot(R, uo)[:, None]
            return (G / up[:, 0])[:, None] * bracket

        vals, _ = adaptive_gk(integrand, lo, hi, own, live.size, 4,
                              tol / max(e * e * kappa**4, 1e-300))
        f[live] = e * e * kappa**4 * vals
    Ft = raise_tensor(_tail_tensor(p, np.column_stack([ts, qt]), tol))
    f += e * np.einsum("mab,mb->ma", Ft, lower(u))
    return f


def self_force_four(p, t, tol=DEFAULT_TOL):
    """Self four-force at coordinate time ``t`` (proper time reported alongside)."""
    f = self_force_four_batch(p, [t], tol)[0]
    return SelfForceSample(p.worldline.proper_time(t), float(t), f)
