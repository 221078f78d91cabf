"""Energy-momentum tensor of the higher-order field and the world-tube flux.

``box F`` is never differenced numerically: off the worldline the retarded
field satisfies ``box F = kappa^2 (F - d^[a U^b])`` with ``U`` the
Lienard-Wiechert potential, whose gradient is analytic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OnWorldline
from .fields import DEFAULT_TOL, field_batch, lw_batch
from .geometry import METRIC, boost, lower, minkowski_dot, raise_tensor
from .quadrature import gauss_legendre
from .worldline import _four_acceleration

G = METRIC


@dataclass(frozen=True)
class FermiTetrad:
    tau: float
    e0: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    @property
    def spatial(self):
        return np.stack([self.e1, self.e2, self.e3])


@dataclass(frozen=True)
class TubePoints:
    """Sample points on the retarded light-cone sphere of radius ``r`` at ``tau``."""

    tau: float
    r: float
    theta: np.ndarray
    phi: np.ndarray
    X: np.ndarray
    N: np.ndarray
    omega: np.ndarray
    weight: np.ndarray


def _kinematics(w, t):
    q, v, a = (x.reshape(3) for x in w.evaluate(np.array([t])))
    gamma = 1.0 / np.sqrt(1.0 - v @ v)
    u = gamma * np.concatenate([[1.0], v])
    return q, u, _four_acceleration(v, a), gamma


def fermi_transport(p, tau0, tau1, steps):
    """Fermi-Walker transport of the spatial triad from ``tau0`` to ``tau1`` (RK4 in proper time).

    The triad at ``tau0`` is the pure-boost image of the Cartesian axes.

    Raises
    ------
    OutOfRange
        If ``tau1`` lies beyond the sampled history.
    """
    w = p.worldline
    if steps < 1:
        raise ValueError("steps must be positive")
    t0 = w.time_at_proper(tau0)
    w.time_at_proper(tau1)  # range check
    _, u0, _, _ = _kinematics(w, t0)
    Linv = boost(-u0[1:] / u0[0])
    triad = Linv[:, 1:].T.copy()

    def rhs(t, E):
        _, u, A, gamma = _kinematics(w, min(t, w.t_end))
        dE = (minkowski_dot(E, A)[:, None] * u[None, :] - minkowski_dot(E, u)[:, None] * A[None, :])
        return gamma, dE

    dtau = (tau1 - tau0) / steps
    t, E = t0, triad
    for _ in range(steps):
        k1t, k1 = rhs(t, E)
        k2t, k2 = rhs(t + 0.5 * dtau * k1t, E + 0.5 * dtau * k1)
        k3t, k3 = rhs(t + 0.5 * dtau * k2t, E + 0.5 * dtau * k2)
        k4t, k4 = rhs(t + dtau * k3t, E + dtau * k3)
        t += dtau * (k1t + 2 * k2t + 2 * k3t + k4t) / 6.0
        E = E + dtau * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    t1 = w.time_at_proper(tau1)
    _, u1, _, _ = _kinematics(w, t1)
    return FermiTetrad(float(tau1), u1, E[0], E[1], E[2])


# ---------------------------------------------------------------------------
# energy-momentum tensor

def field_parts(p, X, tol=DEFAULT_TOL, t_ret=None):
    """Contravariant ``F``, gradient ``d_c F^{ab}`` and ``box F`` at points ``X``."""
    out = field_batch(p, X, want=("F", "dF"), tol=tol, t_ret=t_ret)
    Fu = raise_tensor(out["F"])
    _, gradU = lw_batch(p, X, t_ret=out["t_ret"])
    dU = np.einsum("ac,mcb->mab", G, gradU)
    box = p.kappa**2 * (Fu - (dU - np.swapaxes(dU, -1, -2)))
    return Fu, out["dF"], box


def _divergence(dF):
    """``J^d = d_mu F^{mu d}``."""
    return np.einsum("mccd->md", dF)


def _expr(kappa, A, B):
    """One ordered half of the bilinear tensor, times ``-8 pi``; A, B are (Fu, dF, box)."""
    Fu, dF, Lu = A
    Hu, dH, Mu = B
    Fl = raise_tensor(Fu)
    Ml = raise_tensor(Mu)
    J, K = _divergence(dF), _divergence(dH)
    inv = 1.0 / kappa**2
    t1 = np.einsum("cr,mrs,msd->mcd", G, Fl, Hu)
    t2 = 0.25 * np.einsum("mrs,mrs->m", Fl, Hu)[:, None, None] * G
    t3 = np.einsum("cr,mrs,msd->mcd", G, Fl, Mu)
    t4 = np.einsum("mds,msr,rc->mcd", Fu, Ml, G)
    t5 = -K[:, :, None] * J[:, None, :]
    t6 = np.einsum("mrs,mrs->m", Fl, Mu)
    t7 = minkowski_dot(J, K)
    return t1 + t2 - inv * (t3 + t4 + t5) - 0.5 * inv * (t6 + t7)[:, None, None] * G


def tensor_from_parts(kappa, A, B=None):
    """``T^{cd}`` from field parts; the bilinear form when ``B`` is given."""
    if B is None:
        return _expr(kappa, A, A) / (-4.0 * np.pi)
    return (_expr(kappa, A, B) + _expr(kappa, B, A)) / (-8.0 * np.pi)


def _sum_parts(parts):
    return tuple(sum(p[i] for p in parts) for i in range(3))


def _common_kappa(particles):
    kappas = {p.kappa for p in particles}
    if len(kappas) != 1:
        raise ValueError("all particles must share the same kappa")
    return kappas.pop()


def em_tensor_batch(particles, X, tol=DEFAULT_TOL):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not particles:
        return np.zeros((X.shape[0], 4, 4))
    kappa = _common_kappa(particles)
    total = _sum_parts([field_parts(p, X, tol) for p in particles])
    return tensor_from_parts(kappa, total)


def em_tensor_at(particles, x, tol=DEFAULT_TOL):
    """Energy-momentum tensor ``T^{cd}`` of the total retarded field at ``x``."""
    return em_tensor_batch(particles, np.asarray(x, dtype=float).reshape(1, 4), tol)[0]


def em_tensor_pair(p1, p2, x, tol=DEFAULT_TOL):
    """Symmetrised bilinear tensor ``T^{cd}(F_1, F_2)`` at ``x``."""
    kappa = _common_kappa([p1, p2])
    X = np.asarray(x, dtype=float).reshape(1, 4)
    return tensor_from_parts(kappa, field_parts(p1, X, tol), field_parts(p2, X, tol))[0]


# ---------------------------------------------------------------------------
# world-tube flux

def tube_points(p, tau, r, n_theta=24, n_phi=48, tetrad=None):
    """Light-cone sphere ``X = q(tau) + r (u + N)`` with surface covectors and weights."""
    w = p.worldline
    t = w.time_at_proper(tau)
    q, u, A, _ = _kinematics(w, t)
    if tetrad is None:
        tetrad = fermi_transport(p, min(0.0, tau), tau, max(1, int(np.ceil(abs(tau) / 1e-3))))
    x, wx = gauss_legendre(n_theta)
    theta = np.arccos(x)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    dirs = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1).reshape(-1, 3)
    N = dirs @ tetrad.spatial
    X = np.concatenate([[t], q])[None, :] + r * (u[None, :] + N)
    aN = minkowski_dot(A[None, :], N)
    omega = (r * aN)[:, None] * lower(u)[None, :] + (1.0 + r * aN)[:, None] * lower(N)
    weight = np.repeat(wx, n_phi) * (2.0 * np.pi / n_phi)
    return TubePoints(float(tau), float(r), th.ravel(), ph.ravel(), X, N, omega, weight)


def worldtube_flux(p, tau, epsilon, n_theta=24, n_phi=48, tol=DEFAULT_TOL, tetrad=None):
    """``eps^2 * closed-surface integral of T^{cd} omega_d`` over the tube sphere at ``tau``.

    Raises
    ------
    OnWorldline
        For ``epsilon == 0``.
    """
    if epsilon <= 0:
        raise OnWorldline("tube radius must be positive")
    pts = tube_points(p, tau, epsilon, n_theta, n_phi, tetrad)
    t = p.worldline.time_at_proper(tau)
    parts = field_parts(p, pts.X, tol, t_ret=np.full(pts.X.shape[0], t))
    T = tensor_from_parts(p.kappa, parts)
    integrand = np.einsum("mcd,md->mc", T, pts.omega)
    return epsilon**2 * np.einsum("mc,m->c", integrand, pts.weight)


def richardson(values, eps):
    """Polynomial extrapolation to ``eps = 0`` through all ladder values."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    V = np.vander(eps, eps.size, increasing=True)
    coef = np.linalg.solve(V, values.reshape(eps.size, -1))
    return coef[0].reshape(values.shape[1:])
