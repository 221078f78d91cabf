"""Retarded potentials and fields of a point charge on a prescribed worldline.

Every quantity splits into a boundary term at the retarded point, an
integral over the sampled part of the history (adaptive Gauss-Kronrod in
coordinate time) and an integral over the inertial past (closed form, see
:mod:`bltp.tails`).  The proper-time measure is folded in through
``u^a dtau = (1, v) dt``.

Field tensors use the index conventions of :mod:`bltp.geometry`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import OnWorldline
from .geometry import FieldTensorValue, antisym_outer, boost, four_velocity, lower, minkowski_dot
from .quadrature import adaptive_gk, split_interval
from .tails import rest_tail
from .worldline import ON_WORLDLINE_TOL, Worldline, _four_acceleration, retarded_time

DEFAULT_TOL = 1e-9

# independent (a, b) index pairs of an antisymmetric 4x4 tensor
_PAIRS = tuple((a, b) for a in range(4) for b in range(a + 1, 4))


@dataclass(frozen=True)
class Particle:
    """Point charge with bare mass and Bopp wave number ``kappa``."""

    charge: float
    mass: float
    kappa: float
    worldline: Worldline

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    def with_worldline(self, w):
        return Particle(self.charge, self.mass, self.kappa, w)


@dataclass(frozen=True)
class RetardedGeometry:
    tau_ret: float
    t_ret: float
    R: np.ndarray
    D: float
    S: float
    u_emit: np.ndarray
    a_emit: np.ndarray


def _emission(w, X, t_ret):
    q, v, a = w.evaluate(t_ret)
    u = four_velocity(v)
    acc = _four_acceleration(v, a)
    R = X.copy()
    R[:, 0] -= t_ret
    R[:, 1:] -= q
    S = minkowski_dot(u, R)
    return R, S, u, acc


def retarded_geometry(p, x):
    """Emission event data for the field point ``x``."""
    X = np.asarray(x, dtype=float).reshape(1, 4)
    w = p.worldline
    t_ret = retarded_time(w, X[0])
    R, S, u, acc = _emission(w, X, np.array([t_ret]))
    return RetardedGeometry(w.proper_time(t_ret), t_ret, R[0], 0.0, float(S[0]), u[0], acc[0])


def _sampled_integrand(w, kappa, X, want):
    """Integrand over coordinate time for the sampled epoch; see :func:`field_batch`."""
    k2, k4 = kappa**2, kappa**4

    def f(tp, owner):
        q, v, _ = w.evaluate(tp)
        x = X[owner]
        dt = x[:, 0] - tp
        dx = x[:, 1:] - q
        d2 = np.maximum(dt * dt - np.einsum("ij,ij->i", dx, dx), 0.0)
        kd = kappa * np.sqrt(d2)
        U = np.empty((tp.size, 4))
        U[:, 0] = 1.0
        U[:, 1:] = v
        cols = []
        need2 = want & {"F", "gauge", "dF"}
        g2 = _backend.ratio_array(2, kd) if need2 else None
        if "A" in want:
            cols.append(k2 * _backend.ratio_array(1, kd)[:, None] * U)
        if "F" in want:
            cols.append(-k4 * g2[:, None] * (dx - v * dt[:, None]))
            cols.append(k4 * g2[:, None] * np.cross(dx, v))
        if "gauge" in want:
            cols.append((k2 * g2 * (-dt + np.einsum("ij,ij->i", dx, v)))[:, None])
        if "dF" in want:
            g3 = _backend.ratio_array(3, kd)
            R = np.empty((tp.size, 4))
            R[:, 0] = dt
            R[:, 1:] = dx
            Rl = lower(R)
            RU = np.stack([R[:, a] * U[:, b] - R[:, b] * U[:, a] for a, b in _PAIRS], axis=1)
            cols.append((k4 * g3[:, None, None] * Rl[:, :, None] * RU[:, None, :]).reshape(tp.size, 24))
            cols.append(k2 * g2[:, None] * U)
        return np.concatenate(cols, axis=1)

    return f


def _layout(want):
    sizes = [("A", 4), ("E", 3), ("B", 3), ("gauge", 1), ("Q3", 24), ("Q2", 4)]
    keep = {"A": "A" in want, "E": "F" in want, "B": "F" in want,
            "gauge": "gauge" in want, "Q3": "dF" in want, "Q2": "dF" in want}
    out, pos = {}, 0
    for name, n in sizes:
        if keep[name]:
            out[name] = slice(pos, pos + n)
            pos += n
    return out, pos


def _unpack_pairs(vals):
    """(m, 4, 6) pair components -> (m, 4, 4, 4) antisymmetric in the last two."""
    out = np.zeros(vals.shape[:-1] + (4, 4))
    for k, (a, b) in enumerate(_PAIRS):
        out[..., a, b] = vals[..., k]
        out[..., b, a] = -vals[..., k]
    return out


def _eb_tensor(E, B):
    """Covariant tensors (m, 4, 4) from E, B arrays (m, 3)."""
    m = E.shape[0]
    F = np.zeros((m, 4, 4))
    F[:, 1:, 0] = E
    F[:, 0, 1:] = -E
    F[:, 2, 3], F[:, 3, 2] = B[:, 0], -B[:, 0]
    F[:, 3, 1], F[:, 1, 3] = B[:, 1], -B[:, 1]
    F[:, 1, 2], F[:, 2, 1] = B[:, 2], -B[:, 2]
    return F


def field_batch(p, X, want=("A", "F", "dF", "gauge"), tol=DEFAULT_TOL, t_ret=None):
    """Evaluate several retarded quantities at many field points at once.

    Parameters
    ----------
    X : (m, 4) field points
    want : subset of ``{"A", "F", "dF", "gauge"}``
    t_ret : optional known retarded times (skips root finding)

    Returns
    -------
    dict with (as requested) ``A`` (m,4) contravariant potential, ``F``
    (m,4,4) covariant field tensor, ``dF`` (m,4,4,4) ``d_c F^{ab}`` indexed
    ``[c, a, b]``, ``gauge`` (m,), and always ``t_ret``, ``R``, ``S``,
    ``u``, ``acc`` and ``err`` (combined quadrature error estimate).

    Raises
    ------
    OnWorldline
    """
    want = set(want)
    w = p.worldline
    kappa, e = p.kappa, p.charge
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = X.shape[0]
    if t_ret is None:
        t_ret = np.array([retarded_time(w, x) for x in X])
    else:
        t_ret = np.asarray(t_ret, dtype=float).reshape(m)
    R, S, u, acc = _emission(w, X, t_ret)
    if np.any(np.linalg.norm(R[:, 1:], axis=1) < ON_WORLDLINE_TOL):
        raise OnWorldline("field point on the worldline")

    layout, ncomp = _layout(want)
    sampled = np.zeros((m, ncomp))
    err = np.zeros(m)
    live = np.flatnonzero(t_ret > w.t_start)
    if live.size and ncomp:
        cap = 0.5 * np.pi / kappa
        los, his, own = [], [], []
        for slot, i in enumerate(live):
            lo, hi = split_interval(w.t_start, t_ret[i], cap)
            los.append(lo)
            his.append(hi)
            own.append(np.full(lo.size, slot))
        vals, errs = adaptive_gk(_sampled_integrand(w, kappa, X[live], want),
                                 np.concatenate(los), np.concatenate(his),
                                 np.concatenate(own), live.size, ncomp, tol)
        sampled[live] = vals
        err[live] = errs

    # inertial past, evaluated in its rest frame
    L = boost(w.v_past)
    Linv = boost(-w.v_past)
    origin = np.concatenate([[w.t_start], w.q_start])
    Xr = (X - origin) @ L.T
    tail = rest_tail(kappa, Xr, tol=min(tol, 1e-12))
    err = err + tail["err"]

    out = {"t_ret": t_ret, "R": R, "S": S, "u": u, "acc": acc, "err": err}
    if "A" in want:
        out["A"] = e * (sampled[:, layout["A"]] + tail["QA"] @ Linv.T)
    if "F" in want:
        Fint = _eb_tensor(sampled[:, layout["E"]], sampled[:, layout["B"]])
        Fint += np.einsum("ca,mcd,db->mab", L, _eb_tensor(tail["QE"], tail["QB"]), L)
        boundary = 0.5 * kappa**2 * antisym_outer(lower(R), lower(u)) / S[:, None, None]
        out["F"] = e * (Fint + boundary)
    if "gauge" in want:
        out["gauge"] = 0.5 + sampled[:, layout["gauge"]][:, 0] + tail["Qg"]
    if "dF" in want:
        Q3 = _unpack_pairs(sampled[:, layout["Q3"]].reshape(m, 4, 6))
        Q3 += np.einsum("xc,ay,bz,mxyz->mcab", L, Linv, Linv, tail["Q3"])
        Q2 = sampled[:, layout["Q2"]] + tail["Q2"] @ Linv.T
        eye = np.eye(4)
        Q3 += eye[None, :, :, None] * Q2[:, None, None, :] - eye[None, :, None, :] * Q2[:, None, :, None]
        out["dF"] = e * kappa**2 * (Q3 + _gradient_boundary(kappa, R, S, u, acc))
    return out


def _gradient_boundary(kappa, R, S, u, acc):
    """Retarded-point terms of ``d_c F^{ab} / (e kappa^2)``."""
    Rl, ul = lower(R), lower(u)
    aR = minkowski_dot(acc, R)
    RU = antisym_outer(R, u)
    RA = antisym_outer(R, acc)
    eye = np.eye(4)
    dU = eye[None, :, :, None] * u[:, None, None, :] - eye[None, :, None, :] * u[:, None, :, None]
    S1 = S[:, None, None, None]
    coef = (-(1.0 + aR)[:, None] * Rl / S[:, None] ** 3 - ul / S[:, None] ** 2)
    out = 0.5 * coef[:, :, None, None] * RU[:, None, :, :]
    out += 0.5 * Rl[:, :, None, None] * RA[:, None, :, :] / S1**2
    out += 0.5 * dU / S1
    out += 0.125 * kappa**2 * Rl[:, :, None, None] * RU[:, None, :, :] / S1
    return out


def _single(p, x, want, tol):
    return field_batch(p, np.asarray(x, dtype=float).reshape(1, 4), want, tol)


def vector_potential(p, x, tol=DEFAULT_TOL):
    """Retarded four-potential ``A^a`` (contravariant)."""
    return _single(p, x, {"A"}, tol)["A"][0]


def field_tensor(p, x, tol=DEFAULT_TOL):
    """Retarded field tensor as a :class:`FieldTensorValue`."""
    return FieldTensorValue.from_covariant(_single(p, x, {"F"}, tol)["F"][0])


def field_tensor_gradient(p, x, tol=DEFAULT_TOL):
    """``d_c F^{ab}`` as a (4, 4, 4) array indexed ``[c, a, b]``."""
    return _single(p, x, {"dF"}, tol)["dF"][0]


def gauge_residual(p, x, tol=DEFAULT_TOL):
    """Pointwise Lorenz-gauge bracket; vanishes for every subluminal history."""
    return float(_single(p, x, {"gauge"}, tol)["gauge"][0])


def lw_batch(p, X, t_ret=None):
    """Lienard-Wiechert potential ``U^a`` and gradient ``d_c U^a`` (indexed ``[c, a]``)."""
    w = p.worldline
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if t_ret is None:
        t_ret = np.array([retarded_time(w, x) for x in X])
    R, S, u, acc = _emission(w, X, np.asarray(t_ret, dtype=float).reshape(-1))
    e = p.charge
    U = -e * u / S[:, None]
    Rl, ul = lower(R), lower(u)
    aR = minkowski_dot(acc, R)
    dS = ul + ((1.0 + aR) / S)[:, None] * Rl
    S2 = (S * S)[:, None, None]
    grad = -e * (Rl[:, :, None] * acc[:, None, :] - dS[:, :, None] * u[:, None, :]) / S2
    return U, grad


def lw_potential(p, x):
    """``(U, gradU)`` with ``gradU[c, a] = d_c U^a``."""
    U, grad = lw_batch(p, np.asarray(x, dtype=float).reshape(1, 4))
    return U[0], grad[0]
