"""Sampled particle histories.

A :class:`Worldline` stores coordinate-time samples ``(t, q, p)`` with the
momentum per unit mass ``p = gamma v`` as the primary variable, so every
derived speed is strictly subluminal.  Before the first sample the particle
moves inertially with the first sample's velocity (at rest in the usual
case), which is what lets history integrals reach back to ``-inf`` in closed
form.

Positions between samples are piecewise Hermite: cubic from ``(q, v)`` at the
nodes, or quintic (C^2) when node accelerations are stored as well.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import OnWorldline, OutOfRange
from .geometry import four_velocity
from .quadrature import gauss_legendre

CSV_COLUMNS = ("t", "qx", "qy", "qz", "px", "py", "pz")
ON_WORLDLINE_TOL = 1e-12

# Hermite bases as coefficient rows (lowest power first)
_CUBIC = np.array([
    [1.0, 0.0, -3.0, 2.0],
    [0.0, 1.0, -2.0, 1.0],
    [0.0, 0.0, 3.0, -2.0],
    [0.0, 0.0, -1.0, 1.0],
])
_QUINTIC = np.array([
    [1.0, 0.0, 0.0, -10.0, 15.0, -6.0],
    [0.0, 1.0, 0.0, -6.0, 8.0, -3.0],
    [0.0, 0.0, 0.5, -1.5, 1.5, -0.5],
    [0.0, 0.0, 0.0, 10.0, -15.0, 6.0],
    [0.0, 0.0, 0.0, -4.0, 7.0, -3.0],
    [0.0, 0.0, 0.0, 0.5, -1.0, 0.5],
])


def momentum_to_velocity(p):
    """``v = p / sqrt(1 + |p|^2)``; ``|v| < 1`` for every finite ``p``."""
    p = np.asarray(p, dtype=float)
    return p / np.sqrt(1.0 + np.sum(p * p, axis=-1, keepdims=True))


def velocity_to_momentum(v):
    v = np.asarray(v, dtype=float)
    v2 = np.sum(v * v, axis=-1, keepdims=True)
    if np.any(v2 >= 1.0):
        raise ValueError("velocity must be subluminal")
    return v / np.sqrt(1.0 - v2)


@dataclass(frozen=True)
class KinematicState:
    t: float
    q: np.ndarray
    v: np.ndarray
    gamma: float
    a: np.ndarray
    u: np.ndarray
    fourAcc: np.ndarray


def _four_acceleration(v, a):
    """``du/dtau`` from coordinate velocity and acceleration (broadcasts)."""
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    gamma = 1.0 / np.sqrt(1.0 - np.sum(v * v, axis=-1))
    gdot = gamma**3 * np.sum(v * a, axis=-1)
    out = np.empty(v.shape[:-1] + (4,))
    out[..., 0] = gamma * gdot
    out[..., 1:] = gamma[..., None] * (gdot[..., None] * v + gamma[..., None] * a)
    return out


class Worldline:
    """Immutable sampled history.

    Parameters
    ----------
    t : (N,) strictly increasing sample times, ``t[0]`` is ``t_start``
    q : (N, 3) positions
    p : (N, 3) momenta per unit mass
    acc : (N, 3), optional
        Coordinate accelerations; switches interpolation to quintic Hermite.
    """

    def __init__(self, t, q, p, acc=None):
        t = np.array(t, dtype=float).reshape(-1)
        q = np.array(q, dtype=float).reshape(-1, 3)
        p = np.array(p, dtype=float).reshape(-1, 3)
        if t.size == 0 or q.shape[0] != t.size or p.shape[0] != t.size:
            raise ValueError("t, q and p must have matching non-zero length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("non-finite samples")
        self.t = t
        self.q = q
        self.p = p
        self.v = momentum_to_velocity(p)
        if acc is not None:
            acc = np.array(acc, dtype=float).reshape(-1, 3)
            if acc.shape[0] != t.size:
                raise ValueError("acc must match t")
        self.acc = acc
        for arr in (self.t, self.q, self.p, self.v) + ((acc,) if acc is not None else ()):
            arr.setflags(write=False)
        self.t_start = float(t[0])
        self.t_end = float(t[-1])
        self.q_start = q[0].copy()
        self.v_past = self.v[0].copy()
        self._speed_max = np.maximum.accumulate(np.linalg.norm(self.v, axis=1))

    # -- construction helpers ------------------------------------------------

    @classmethod
    def at_rest(cls, q0=(0.0, 0.0, 0.0), t_start=0.0, t_end=None, h=None):
        """Eternal rest; samples are only added when ``t_end`` is given."""
        return cls.inertial(q0, (0.0, 0.0, 0.0), t_start, t_end, h)

    @classmethod
    def inertial(cls, q0, v, t_start=0.0, t_end=None, h=None):
        """Eternal uniform motion through ``q0`` at ``t_start`` with velocity ``v``."""
        v = np.asarray(v, dtype=float)
        if t_end is None:
            t = np.array([t_start])
        else:
            n = max(1, int(math.ceil((t_end - t_start) / (h or (t_end - t_start)) - 1e-9)))
            t = np.linspace(t_start, t_end, n + 1)
        q = np.asarray(q0, dtype=float)[None, :] + (t - t_start)[:, None] * v[None, :]
        p = np.broadcast_to(velocity_to_momentum(v), q.shape)
        return cls(t, q, p, np.zeros_like(q))

    @classmethod
    def from_velocity(cls, t, q, v, acc=None):
        return cls(t, q, velocity_to_momentum(v), acc)

    # -- evaluation ----------------------------------------------------------

    @property
    def interpolation(self):
        return "quintic" if self.acc is not None else "cubic"

    def evaluate(self, ts):
        """Positions, velocities and coordinate accelerations at times ``ts``.

        Raises
        ------
        OutOfRange
            For any time beyond the last sample.
        """
        ts = np.asarray(ts, dtype=float)
        flat = ts.reshape(-1)
        if flat.size and np.max(flat) > self.t_end + 1e-12 * (1.0 + abs(self.t_end)):
            raise OutOfRange(f"time {np.max(flat)!r} beyond last sample {self.t_end!r}")
        q = np.empty((flat.size, 3))
        v = np.empty((flat.size, 3))
        a = np.zeros((flat.size, 3))
        past = flat <= self.t_start
        if np.any(past):
            q[past] = self.q_start + (flat[past] - self.t_start)[:, None] * self.v_past
            v[past] = self.v_past
        live = ~past
        if np.any(live):
            ql, vl, al = self._hermite(flat[live])
            q[live], v[live], a[live] = ql, vl, al
        shape = ts.shape + (3,)
        return q.reshape(shape), v.reshape(shape), a.reshape(shape)

    def _hermite(self, ts):
        t = self.t
        i = np.clip(np.searchsorted(t, ts, side="right") - 1, 0, t.size - 2)
        H = t[i + 1] - t[i]
        s = (ts - t[i]) / H
        if self.acc is None:
            vals = np.stack([self.q[i], H[:, None] * self.v[i],
                             self.q[i + 1], H[:, None] * self.v[i + 1]], axis=1)
            basis = _CUBIC
        else:
            H2 = (H * H)[:, None]
            vals = np.stack([self.q[i], H[:, None] * self.v[i], H2 * self.acc[i],
                             self.q[i + 1], H[:, None] * self.v[i + 1], H2 * self.acc[i + 1]], axis=1)
            basis = _QUINTIC
        coef = np.einsum("bp,nbk->npk", basis, vals)
        deg = basis.shape[1]
        powers = np.arange(deg)
        sp = s[:, None] ** powers[None, :]
        q = np.einsum("np,npk->nk", sp, coef)
        d1 = np.zeros_like(sp)
        d1[:, 1:] = powers[1:] * sp[:, :-1]
        d2 = np.zeros_like(sp)
        d2[:, 2:] = powers[2:] * (powers[2:] - 1) * sp[:, :-2]
        v = np.einsum("np,npk->nk", d1, coef) / H[:, None]
        a = np.einsum("np,npk->nk", d2, coef) / (H * H)[:, None]
        # exact node values
        j = np.searchsorted(t, ts)
        jc = np.minimum(j, t.size - 1)
        hit = t[jc] == ts
        if np.any(hit):
            q[hit] = self.q[jc[hit]]
            v[hit] = self.v[jc[hit]]
            if self.acc is not None:
                a[hit] = self.acc[jc[hit]]
        return q, v, a

    def position(self, t):
        return self.evaluate(t)[0]

    def state_at(self, t):
        """Kinematic state at coordinate time ``t``; the exact rest state before ``t_start``."""
        q, v, a = (x.reshape(3) for x in self.evaluate(np.array([t])))
        u = four_velocity(v)
        return KinematicState(float(t), q, v, float(u[0]), a, u, _four_acceleration(v, a))

    # -- kinematics ----------------------------------------------------------

    def past_speed_bound(self, t):
        """Running maximum of ``|v|`` over samples up to ``t``."""
        if t < self.t_start:
            return float(np.linalg.norm(self.v_past))
        k = np.searchsorted(self.t, t, side="right") - 1
        return float(self._speed_max[k])

    def proper_time_between(self, t0, t1, order=8):
        """``int_{t0}^{t1} sqrt(1 - v^2) dt`` with Gauss-Legendre panels on the sample grid."""
        if t1 < t0:
            raise ValueError("need t0 <= t1")
        if t1 > self.t_end + 1e-12 * (1.0 + abs(self.t_end)):
            raise OutOfRange(f"time {t1!r} beyond last sample {self.t_end!r}")
        total = 0.0
        if t0 < self.t_start:
            past_end = min(t1, self.t_start)
            total += math.sqrt(1.0 - float(self.v_past @ self.v_past)) * (past_end - t0)
            t0 = past_end
        if t1 > t0:
            inner = self.t[(self.t > t0) & (self.t < t1)]
            edges = np.concatenate([[t0], inner, [t1]])
            x, w = gauss_legendre(order)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            ts = mid[:, None] + half[:, None] * x[None, :]
            _, v, _ = self.evaluate(ts.ravel())
            rate = np.sqrt(1.0 - np.sum(v * v, axis=1)).reshape(ts.shape)
            total += float(np.sum(half[:, None] * w[None, :] * rate))
        return total

    def proper_time(self, t):
        """Proper time with origin at ``t_start``."""
        if t >= self.t_start:
            return self.proper_time_between(self.t_start, t)
        return -self.proper_time_between(t, self.t_start)

    def time_at_proper(self, tau):
        """Inverse of :meth:`proper_time`."""
        if tau <= 0:
            return self.t_start + tau / math.sqrt(1.0 - float(self.v_past @ self.v_past))
        if tau > self.proper_time(self.t_end) + 1e-12:
            raise OutOfRange(f"proper time {tau!r} beyond history")
        return brentq(lambda t: self.proper_time(t) - tau, self.t_start, self.t_end,
                      xtol=1e-15, rtol=4 * np.finfo(float).eps)

    # -- slicing and I/O -----------------------------------------------------

    def truncated(self, t):
        """Samples with time ``<= t``."""
        k = np.searchsorted(self.t, t, side="right")
        acc = None if self.acc is None else self.acc[:k]
        return Worldline(self.t[:k], self.q[:k], self.p[:k], acc)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in np.column_stack([self.t, self.q, self.p]):
                writer.writerow([format_float(x) for x in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(h.strip() for h in header) != CSV_COLUMNS:
                raise ValueError(f"expected columns {','.join(CSV_COLUMNS)}, got {','.join(header)}")
            rows = np.array([[float(x) for x in row] for row in reader if row])
        return cls(rows[:, 0], rows[:, 1:4], rows[:, 4:7])


def format_float(x):
    """17 significant digits, enough to round-trip a double."""
    return f"{float(x):.17g}"


def retarded_time(w, x):
    """Coordinate time ``s`` with ``x0 - s = |x - q(s)|``.

    Raises
    ------
    OnWorldline
        If the field point lies on the worldline.
    OutOfRange
        If the retarded point is later than the last sample.
    """
    x = np.asarray(x, dtype=float)
    t, xs = float(x[0]), x[1:]
    tol = ON_WORLDLINE_TOL

    def h(s):
        return (t - s) - np.linalg.norm(xs - w.position(s))

    if t <= w.t_start or h(w.t_start) <= 0.0:
        y = xs - w.q_start
        tau = t - w.t_start
        v = w.v_past
        b = tau - float(y @ v)
        a = 1.0 - float(v @ v)
        c = tau * tau - float(y @ y)
        disc = max(b * b - a * c, 0.0)
        # smaller root, written to avoid cancellation
        u = c / (b + math.sqrt(disc)) if b > 0 else (b - math.sqrt(disc)) / a
        s = w.t_start + u
    else:
        hi = min(t, w.t_end)
        if t > w.t_end and h(w.t_end) > 0.0:
            raise OutOfRange(f"retarded point of t={t!r} lies beyond the last sample {w.t_end!r}")
        nodes = w.t[(w.t > w.t_start) & (w.t < hi)]
        grid = np.concatenate([[w.t_start], nodes, [hi]])
        hv = (t - grid) - np.linalg.norm(xs - w.position(grid), axis=1)
        k = int(np.argmax(hv <= 0.0))
        if hv[k] == 0.0:
            s = float(grid[k])
        else:
            s = brentq(h, grid[k - 1], grid[k], xtol=1e-15 * (1.0 + abs(t)),
                       rtol=4 * np.finfo(float).eps, maxiter=200)
    if np.linalg.norm(xs - w.position(s)) < tol:
        raise OnWorldline(f"point {x.tolist()} lies on the worldline")
    return float(s)


def retarded_time_many(w, X):
    return np.array([retarded_time(w, x) for x in np.atleast_2d(X)])


def smooth_kick(speed, ramp, direction=(1.0, 0.0, 0.0), t_kick=0.0, t_end=10.0, h=0.01,
                q0=(0.0, 0.0, 0.0)):
    """Rest until ``t_kick``, then a C^2 ramp of duration ``ramp`` to ``speed`` along ``direction``.

    The velocity profile is ``speed * (10 s^3 - 15 s^4 + 6 s^5)``; positions and
    accelerations are sampled exactly, so the quintic interpolant is accurate to
    O(h^6).
    """
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    t = t_kick + h * np.arange(int(round((t_end - t_kick) / h)) + 1)
    s = np.clip((t - t_kick) / ramp, 0.0, 1.0)
    prof = s**3 * (10.0 - 15.0 * s + 6.0 * s * s)
    dprof = 30.0 * s**2 * (1.0 - s) ** 2 / ramp
    disp = ramp * s**4 * (2.5 - 3.0 * s + s * s) + np.maximum(t - t_kick - ramp, 0.0)
    q = np.asarray(q0, dtype=float) + speed * disp[:, None] * n
    v = speed * prof[:, None] * n
    a = speed * dprof[:, None] * n
    return Worldline.from_velocity(t, q, v, a)
