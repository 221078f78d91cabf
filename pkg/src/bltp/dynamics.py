"""Windowed Picard continuation of the momentum integral equation.

For each particle the unknown is the momentum per unit mass ``p = gamma v``
on the uniform grid ``t_k = A0 + k h``.  On a window ``(t_a, t_b]`` the map

    p(t_k) = p(t_a) + int_{t_a}^{t_k} (e (E + v x B) + F_ext) / m0 dt

is iterated to a fixed point.  ``E`` and ``B`` are the particle's own
history-integral fields plus, for several particles, the retarded fields of
the others.  All time integrals use the sixth-order stencil rule of
:mod:`bltp.quadrature`; the rest epoch before the grid enters in closed form.

Twelve rest nodes precede ``A0`` so the stencil always has room.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from .errors import NoContraction, StalledWindow, TailBoundExceeded, WorldlineCollision
from .fields import Particle, field_batch
from .quadrature import end_corrections, interval_integrals
from .tails import rest_tail
from .worldline import Worldline, momentum_to_velocity

log = logging.getLogger(__name__)

PREFIX = 12
FORCE_MODELS = ("zero", "constant_window", "gaussian_pulse")


@dataclass(frozen=True)
class ExternalForce:
    """Prescribed external force, continuous and zero before its onset.

    ``gaussian_pulse`` is ``F (exp(-u^2) - exp(-c^2))`` for ``|u| < c`` with
    ``u = (t - t_center)/width`` and cutoff ``c`` (default 6), zero outside.
    ``constant_window`` switches ``F`` on over ``[t_on, t_on + ramp]`` and off
    over ``[t_off, t_off + ramp]`` with half-cosine ramps.
    """

    model: str = "zero"
    F: tuple = (0.0, 0.0, 0.0)
    t_on: float = 0.0
    t_off: float = 0.0
    ramp: float = 0.0
    t_center: float = 0.0
    width: float = 1.0
    cutoff: float = 6.0

    def __post_init__(self):
        if self.model not in FORCE_MODELS:
            raise ValueError(f"unknown force model {self.model!r}")
        object.__setattr__(self, "F", tuple(float(x) for x in self.F))
        if self.model == "constant_window":
            if self.ramp <= 0 or self.t_off < self.t_on + self.ramp:
                raise ValueError("constant_window needs ramp > 0 and t_off >= t_on + ramp")
        if self.model == "gaussian_pulse" and not (self.width > 0 and self.cutoff > 0):
            raise ValueError("gaussian_pulse needs positive width and cutoff")

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def gaussian_pulse(cls, F, t_center, width, cutoff=6.0):
        return cls("gaussian_pulse", tuple(F), t_center=t_center, width=width, cutoff=cutoff)

    @classmethod
    def constant_window(cls, F, t_on, t_off, ramp):
        return cls("constant_window", tuple(F), t_on=t_on, t_off=t_off, ramp=ramp)

    @property
    def onset(self):
        """Earliest time with non-zero force (``inf`` for the zero model)."""
        if self.model == "gaussian_pulse":
            return self.t_center - self.cutoff * self.width
        if self.model == "constant_window":
            return self.t_on
        return math.inf

    def profile(self, t):
        t = np.asarray(t, dtype=float)
        if self.model == "gaussian_pulse":
            u = (t - self.t_center) / self.width
            inside = np.abs(u) < self.cutoff
            return np.where(inside, np.exp(-u * u) - math.exp(-self.cutoff**2), 0.0)
        if self.model == "constant_window":
            up = np.clip((t - self.t_on) / self.ramp, 0.0, 1.0)
            down = np.clip((t - self.t_off) / self.ramp, 0.0, 1.0)
            return 0.5 * (1.0 - np.cos(np.pi * up)) - 0.5 * (1.0 - np.cos(np.pi * down))
        return np.zeros_like(t)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.profile(t)[..., None] * np.asarray(self.F)

    def impulse(self, t0, t1):
        """``int_{t0}^{t1} F dt`` in closed form."""
        return (self._primitive(t1) - self._primitive(t0)) * np.asarray(self.F)

    def _primitive(self, t):
        if self.model == "gaussian_pulse":
            c, w = self.cutoff, self.width
            u = min(max((t - self.t_center) / w, -c), c)
            return w * (0.5 * math.sqrt(math.pi) * (math.erf(u) - math.erf(-c)) - math.exp(-c * c) * (u + c))
        if self.model == "constant_window":
            def ramp_int(x):
                s = min(max(x, 0.0), self.ramp)
                return 0.5 * (s - self.ramp / math.pi * math.sin(math.pi * s / self.ramp)) + max(x - self.ramp, 0.0)
            return ramp_int(t - self.t_on) - ramp_int(t - self.t_off)
        return 0.0

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SolverConfig:
    A0: float = 0.0
    t_end: float = 10.0
    h: float = 0.01
    delta: float = 0.25
    picard_tol: float = 1e-10
    picard_max_iter: int = 50
    tail_tol: float = 1e-12
    min_separation: float = 1e-6

    def __post_init__(self):
        if not (self.h > 0 and self.delta > 0 and self.picard_tol > 0 and self.tail_tol > 0):
            raise ValueError("h, delta and tolerances must be positive")
        if self.h > self.delta / 4 * (1 + 1e-12):
            raise ValueError("need h <= delta / 4")
        if self.t_end <= self.A0:
            raise ValueError("t_end must exceed A0")
        if self.picard_max_iter < 2:
            raise ValueError("picard_max_iter must be at least 2")

    @property
    def n_steps(self):
        return int(math.ceil((self.t_end - self.A0) / self.h - 1e-9))

    def to_dict(self):
        return asdict(self)


@dataclass
class TrajectoryResult:
    """Evolved histories on the grid ``t`` (from ``A0``) with per-window diagnostics."""

    t: np.ndarray
    worldlines: list
    p: list
    q: list
    v: list
    E_self: list
    B_self: list
    E_ext: list
    B_ext: list
    F_ext: list
    contraction_log: list = field(default_factory=list)
    tail_bounds: list = field(default_factory=list)

    def rows(self, n=0):
        """Trajectory table of particle ``n``, one row per grid node."""
        return np.column_stack([self.t, self.q[n], self.p[n], self.v[n],
                                self.E_self[n], self.B_self[n], self.F_ext[n]])


TRAJECTORY_COLUMNS = ("t", "qx", "qy", "qz", "px", "py", "pz", "vx", "vy", "vz",
                      "Ex", "Ey", "Ez", "Bx", "By", "Bz", "Fx", "Fy", "Fz")


def _extrapolate(hist, n):
    """Cubic extrapolation of the last four rows of ``hist`` to the next ``n`` nodes."""
    s = np.arange(1, n + 1, dtype=float)
    nodes = np.array([0.0, -1.0, -2.0, -3.0])
    out = np.zeros((n,) + hist.shape[1:])
    for i, xi in enumerate(nodes):
        others = np.delete(nodes, i)
        li = np.prod([(s - xj) / (xi - xj) for xj in others], axis=0)
        out += li[:, None] * hist[-1 - i]
    return out


class _Track:
    """Grid arrays of one particle, including the rest prefix."""

    def __init__(self, particle, force, t):
        w = particle.worldline
        if np.any(w.v_past != 0.0):
            raise ValueError("the solver needs particles at rest before A0")
        self.particle = particle
        self.force = force
        self.e = particle.charge
        self.m0 = particle.mass
        self.kappa = particle.kappa
        n = t.size
        self.q0 = w.q_start.copy()
        self.p = np.zeros((n, 3))
        self.q = np.tile(self.q0, (n, 1))
        self.v = np.zeros((n, 3))
        self.E = np.zeros((n, 3))
        self.B = np.zeros((n, 3))
        self.Eo = np.zeros((n, 3))
        self.Bo = np.zeros((n, 3))
        self.Fx = force(t)
        # exact impulse per unit mass since t[0]; only the field force goes through the stencil
        self.kick = np.array([force.impulse(t[0], tk) for tk in t]) / self.m0
        self.f = np.zeros((n, 3))
        self.g = np.zeros((n, 3))
        self.acc = np.zeros((n, 3))


class _Solver:
    def __init__(self, particles, forces, cfg, threads=1):
        self.cfg = cfg
        self.threads = max(1, int(threads))
        self.h = cfg.h
        n = PREFIX + cfg.n_steps + 1
        self.t = cfg.A0 + cfg.h * (np.arange(n) - PREFIX)
        for f in forces:
            if f.onset < cfg.A0:
                raise ValueError("external force must vanish before A0")
        self.tracks = [_Track(p, f, self.t) for p, f in zip(particles, forces)]
        kappas = {p.kappa for p in particles}
        if len(kappas) != 1:
            raise ValueError("all particles must share kappa")
        self.kappa = kappas.pop()
        cl, cr = end_corrections()
        self.base = np.ones(n)
        self.base[:cl.size] += cl
        self.corr = cr
        self.log = []
        self.tail_bounds = []
        self._check_separation(PREFIX, PREFIX)

    # -- pieces of one Picard sweep ----------------------------------------------

    def _positions(self, tr, v, a, b):
        inc = interval_integrals(v, np.arange(a, b), b, self.h)
        return tr.q[a] + np.cumsum(inc, axis=0)

    def _self_fields(self, tr, q, v, ks):
        SE, SB = self._history_sums(ks, q, v)
        scale = -tr.e * self.kappa**4 * self.h
        E = scale * SE
        B = scale * SB
        Xr = np.column_stack([self.t[ks] - self.t[0], q[ks] - tr.q0])
        tail = rest_tail(self.kappa, Xr, tol=self.cfg.tail_tol)
        bound = float(np.max(tail["err"])) if ks.size else 0.0
        if bound > self.cfg.tail_tol:
            raise TailBoundExceeded(f"tail error {bound:.3e} exceeds {self.cfg.tail_tol:.1e}")
        E += tr.e * tail["QE"]
        return E, B, bound

    def _history_sums(self, ks, q, v):
        def part(chunk):
            return _backend.history_sums(self.kappa, chunk, self.t, q, v, self.base, self.corr)

        if self.threads == 1 or ks.size < 2 * self.threads:
            return part(ks)
        chunks = np.array_split(ks, self.threads)
        with ThreadPoolExecutor(self.threads) as pool:
            parts = list(pool.map(part, chunks))
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def _other_fields(self, n, work, ks, b):
        E = np.zeros((ks.size, 3))
        B = np.zeros((ks.size, 3))
        target = work[n]
        X = np.column_stack([self.t[ks], target["q"][ks]])
        for m, tr in enumerate(self.tracks):
            if m == n or tr.e == 0.0:
                continue
            src = work[m]
            sl = slice(PREFIX, b + 1)
            w = Worldline(self.t[sl], src["q"][sl], src["p"][sl], src["acc"][sl])
            F = field_batch(tr.particle.with_worldline(w), X, want=("F",), tol=self.cfg.tail_tol)["F"]
            E += F[:, 1:, 0]
            B += np.column_stack([F[:, 2, 3], F[:, 3, 1], F[:, 1, 2]])
        return E, B

    # -- one window --------------------------------------------------------------

    def window(self, a, b):
        """Iterate on nodes ``a+1..b``; commit on success, raise NoContraction otherwise."""
        ks = np.arange(a + 1, b + 1)
        m = ks.size
        work = []
        for tr in self.tracks:
            wk = {"q": tr.q[:b + 1].copy(), "v": tr.v[:b + 1].copy(), "p": tr.p[:b + 1].copy(),
                  "f": tr.f[:b + 1].copy(), "g": tr.g[:b + 1].copy(), "acc": tr.acc[:b + 1].copy()}
            wk["p"][ks] = _extrapolate(tr.p[a - 3:a + 1], m)
            wk["acc"][ks] = _extrapolate(tr.acc[a - 3:a + 1], m)
            work.append(wk)
        residuals, ratios = [], []
        first = None
        bound = 0.0
        for it in range(1, self.cfg.picard_max_iter + 1):
            fields = []
            for wk, tr in zip(work, self.tracks):
                wk["v"][ks] = momentum_to_velocity(wk["p"][ks])
                wk["q"][ks] = self._positions(tr, wk["v"], a, b)
            for n, (wk, tr) in enumerate(zip(work, self.tracks)):
                if tr.e != 0.0:
                    E, B, tb = self._self_fields(tr, wk["q"], wk["v"], ks)
                    bound = max(bound, tb)
                else:
                    E, B = np.zeros((m, 3)), np.zeros((m, 3))
                Eo, Bo = self._other_fields(n, work, ks, b) if len(self.tracks) > 1 else (0.0 * E, 0.0 * B)
                fields.append((E, B, Eo, Bo))
            res = 0.0
            new_p = []
            for wk, tr, (E, B, Eo, Bo) in zip(work, self.tracks, fields):
                v = wk["v"][ks]
                wk["g"][ks] = tr.e * (E + Eo + np.cross(v, B + Bo)) / tr.m0
                wk["f"][ks] = wk["g"][ks] + tr.Fx[ks] / tr.m0
                pn = (tr.p[a] + np.cumsum(interval_integrals(wk["g"], np.arange(a, b), b, self.h), axis=0)
                      + (tr.kick[ks] - tr.kick[a]))
                res = max(res, float(np.max(np.abs(pn - wk["p"][ks]))))
                new_p.append(pn)
            for wk, pn in zip(work, new_p):
                wk["p"][ks] = pn
                wk["acc"][ks] = _acceleration(pn, wk["f"][ks])
            residuals.append(res)
            if first is None:
                first = res
            if len(residuals) > 1:
                ratios.append(res / residuals[-2] if residuals[-2] > 0 else 0.0)
            if res <= self.cfg.picard_tol:
                break
            if it >= 2 and (ratios[-1] >= 1.0 or res > 10.0 * first):
                raise NoContraction(f"window ({self.t[a]:.6g}, {self.t[b]:.6g}] stopped contracting "
                                    f"(residual {res:.3e}, ratio {ratios[-1]:.3f})")
        else:
            raise NoContraction(f"window ({self.t[a]:.6g}, {self.t[b]:.6g}] did not converge in "
                                f"{self.cfg.picard_max_iter} iterations (residual {residuals[-1]:.3e})")

        for wk, tr, (E, B, Eo, Bo) in zip(work, self.tracks, fields):
            tr.p[ks] = wk["p"][ks]
            tr.v[ks] = momentum_to_velocity(tr.p[ks])
            tr.q[ks] = self._positions(tr, tr.v, a, b)
            tr.E[ks], tr.B[ks] = E, B
            tr.Eo[ks], tr.Bo[ks] = Eo, Bo
            tr.f[ks] = wk["f"][ks]
            tr.g[ks] = wk["g"][ks]
            tr.acc[ks] = _acceleration(tr.p[ks], tr.f[ks])
        self._check_separation(a + 1, b)
        entry = {"t_start": float(self.t[a]), "t_end": float(self.t[b]), "nodes": int(m),
                 "iterations": len(residuals), "residual": residuals[-1],
                 "ratio": max(ratios) if ratios else 0.0, "residuals": residuals}
        self.log.append(entry)
        self.tail_bounds.append(bound)
        return entry

    def _check_separation(self, lo, hi):
        if len(self.tracks) < 2:
            return
        for i in range(len(self.tracks)):
            for j in range(i + 1, len(self.tracks)):
                d = np.linalg.norm(self.tracks[i].q[lo:hi + 1] - self.tracks[j].q[lo:hi + 1], axis=1)
                if np.min(d) < self.cfg.min_separation:
                    raise WorldlineCollision(f"particles {i} and {j} closer than {self.cfg.min_separation}")

    # -- driver --------------------------------------------------------------------

    def run(self, stop=None):
        last = self.t.size - 1 if stop is None else stop
        nmax = max(1, int(round(self.cfg.delta / self.h)))
        nw = nmax
        clean = 0
        a = min(self.quiescent_until(), last)
        while a < last:
            b = min(a + nw, last)
            try:
                self.window(a, b)
            except NoContraction as exc:
                nw //= 2
                clean = 0
                log.info("halving window to %d nodes: %s", nw, exc)
                if nw < 1:
                    raise StalledWindow(f"window size fell below h at t = {self.t[a]:.6g}") from exc
                continue
            a = b
            clean += 1
            if clean >= 3 and nw < nmax:
                nw = min(2 * nw, nmax)
                clean = 0
        return self.result()

    def quiescent_until(self):
        """Last node up to which ``p = 0`` is the exact solution.

        With at most one charge and no force yet, rest is self-consistent; the
        windows start there so the stencil never leaks later forces backwards.
        """
        if sum(tr.e != 0.0 for tr in self.tracks) > 1:
            return PREFIX
        onset = min(tr.force.onset for tr in self.tracks)
        if math.isinf(onset):
            return self.t.size - 1
        return PREFIX + max(0, int(math.floor((onset - self.cfg.A0) / self.h + 1e-9)))

    def result(self):
        sl = slice(PREFIX, None)
        t = self.t[sl]
        worldlines = [Worldline(t, tr.q[sl], tr.p[sl], tr.acc[sl]) for tr in self.tracks]
        return TrajectoryResult(
            t=t.copy(), worldlines=worldlines,
            p=[tr.p[sl].copy() for tr in self.tracks], q=[tr.q[sl].copy() for tr in self.tracks],
            v=[tr.v[sl].copy() for tr in self.tracks],
            E_self=[tr.E[sl].copy() for tr in self.tracks], B_self=[tr.B[sl].copy() for tr in self.tracks],
            E_ext=[tr.Eo[sl].copy() for tr in self.tracks], B_ext=[tr.Bo[sl].copy() for tr in self.tracks],
            F_ext=[tr.Fx[sl].copy() for tr in self.tracks],
            contraction_log=list(self.log), tail_bounds=list(self.tail_bounds))


def _acceleration(p, f):
    """Coordinate acceleration ``dv/dt`` from ``p`` and ``dp/dt``."""
    gamma = np.sqrt(1.0 + np.sum(p * p, axis=-1, keepdims=True))
    v = p / gamma
    return (f - v * np.sum(v * f, axis=-1, keepdims=True)) / gamma


def solve_multi(particles, forces, cfg, threads=1):
    """Joint evolution of several charges, each at rest before ``A0``.

    Raises
    ------
    WorldlineCollision, StalledWindow, TailBoundExceeded
    """
    if len(particles) != len(forces):
        raise ValueError("one external force per particle")
    return _Solver(list(particles), list(forces), cfg, threads).run()


def solve_single(particle, force, cfg, threads=1):
    """Evolve one charge from rest at ``A0`` to ``t_end``."""
    return solve_multi([particle], [force], cfg, threads)


def picard_window(particle, force, A, delta, cfg):
    """Extend a solved history by one window ``(A, A + delta]``.

    The particle's worldline must be a grid solution from ``cfg.A0`` up to
    ``A`` with stored accelerations (as produced by the solver), or a bare
    rest state when ``A == cfg.A0``.

    Raises
    ------
    NoContraction
        If the iteration fails to contract; the caller should halve ``delta``.
    """
    solver = _Solver([particle], [force], cfg)
    tr = solver.tracks[0]
    a = PREFIX + int(round((A - cfg.A0) / cfg.h))
    w = particle.worldline
    if a > PREFIX:
        t_hist = solver.t[PREFIX:a + 1]
        if w.t.size != t_hist.size or np.max(np.abs(w.t - t_hist)) > 1e-9 * (1 + abs(A)):
            raise ValueError("worldline must be sampled on the solver grid up to A")
        tr.p[PREFIX:a + 1] = w.p
        tr.v[PREFIX:a + 1] = w.v
        tr.q[PREFIX:a + 1] = w.q
        acc = w.acc if w.acc is not None else np.zeros_like(w.q)
        tr.acc[PREFIX:a + 1] = acc
        gamma = np.sqrt(1.0 + np.sum(w.p * w.p, axis=1, keepdims=True))
        tr.f[PREFIX:a + 1] = gamma * acc + gamma**3 * w.v * np.sum(w.v * acc, axis=1, keepdims=True)
        tr.g[PREFIX:a + 1] = tr.f[PREFIX:a + 1] - tr.Fx[PREFIX:a + 1] / tr.m0
    b = min(a + max(1, int(round(delta / cfg.h))), solver.t.size - 1)
    solver.window(a, b)
    sl = slice(PREFIX, b + 1)
    return Worldline(solver.t[sl], tr.q[sl], tr.p[sl], tr.acc[sl])
