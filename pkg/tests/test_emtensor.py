import numpy as np
import pytest

from bltp.emtensor import (em_tensor_at, em_tensor_batch, em_tensor_pair, fermi_transport, richardson, tube_points,
                           worldtube_flux)
from bltp.fields import Particle
from bltp.geometry import METRIC, boost, minkowski_dot
from bltp.selfforce import self_force_four
from bltp.worldline import Worldline, smooth_kick


def _tetrad_matrix(tet):
    return np.stack([tet.e0, tet.e1, tet.e2, tet.e3])


def test_tetrad_rest_and_uniform():
    rest = Particle(1.0, 1.0, 1.0, Worldline.at_rest((0, 0, 0), 0.0, 10.0, 0.1))
    tet = fermi_transport(rest, 0.0, 5.0, 500)
    assert np.allclose(_tetrad_matrix(tet), np.eye(4), atol=1e-14)
    v = np.array([0.3, 0.1, -0.2])
    moving = Particle(1.0, 1.0, 1.0, Worldline.inertial((0, 0, 0), v, 0.0, 10.0, 0.1))
    t0 = fermi_transport(moving, 0.0, 0.0, 1)
    t1 = fermi_transport(moving, 0.0, 5.0, 500)
    assert np.allclose(_tetrad_matrix(t0), _tetrad_matrix(t1), atol=1e-13)
    assert np.allclose(_tetrad_matrix(t1).T, boost(-v), atol=1e-13)


def test_tetrad_orthonormal_along_acceleration():
    p = Particle(1.0, 1.0, 1.0, smooth_kick(0.7, 3.0, (1, 1, 0), 0.0, 14.0, 0.01))
    tet = fermi_transport(p, 0.0, 10.0, 10000)
    E = _tetrad_matrix(tet)
    gram = E @ METRIC @ E.T
    assert np.max(np.abs(gram - METRIC)) < 1e-9
    complete = sum(np.outer(e, e) for e in E[1:])
    u = tet.e0
    assert np.max(np.abs(complete - (np.linalg.inv(METRIC) + np.outer(u, u)))) < 1e-8
    half = _tetrad_matrix(fermi_transport(p, 0.0, 10.0, 5000))
    assert np.max(np.abs(half - E)) < 1e-9


def test_maxwell_limit_energy_density(rest_particle):
    r = 20.0
    T = em_tensor_at([rest_particle], [30.0, r, 0, 0])
    assert T[0, 0] == pytest.approx(1 / (8 * np.pi * r**4), rel=1e-3)


def test_no_particles():
    assert not np.any(em_tensor_at([], [1.0, 2, 3, 4]))
    assert not np.any(em_tensor_batch([], np.zeros((3, 4))))


def test_symmetric_tensor(kicked):
    T = em_tensor_at([kicked], [9.0, 1.0, 0.5, -1.2])
    assert np.allclose(T, T.T, atol=1e-14 * np.max(np.abs(T)))


def _divergence(ps, x, h):
    d = np.zeros(4)
    for c in range(4):
        e = np.zeros(4)
        e[c] = h
        d += (em_tensor_at(ps, x + e, 1e-13)[:, c] - em_tensor_at(ps, x - e, 1e-13)[:, c]) / (2 * h)
    return d


def test_divergence_free_off_worldline(kicked):
    x = np.array([9.0, 1.0, 0.5, -1.2])
    norms = [np.linalg.norm(_divergence([kicked], x, h)) for h in (0.2, 0.1, 0.05)]
    slopes = np.log2(np.array(norms[:-1]) / np.array(norms[1:]))
    assert np.all(slopes > 1.8)


def test_pair_tensor(kicked):
    other = Particle(-0.7, 1.0, 1.0, Worldline.at_rest((2.0, 0, 0), 0.0, 12.0, 0.05))
    x = np.array([9.0, 1.0, 0.5, -1.2])
    single = em_tensor_at([kicked], x)
    assert np.allclose(em_tensor_pair(kicked, kicked, x), single, atol=1e-10, rtol=0)
    assert np.allclose(em_tensor_pair(kicked, other, x), em_tensor_pair(other, kicked, x), atol=1e-15, rtol=0)
    doubled = Particle(-1.4, 1.0, 1.0, other.worldline)
    assert np.allclose(em_tensor_pair(kicked, doubled, x), 2 * em_tensor_pair(kicked, other, x), rtol=1e-12, atol=0)
    total = em_tensor_at([kicked, other], x)
    parts = single + em_tensor_at([other], x) + 2 * em_tensor_pair(kicked, other, x)
    assert np.allclose(total, parts, atol=1e-9, rtol=0)


def test_tube_points_geometry(kicked):
    pts = tube_points(kicked, 2.0, 0.05, 8, 16)
    t = kicked.worldline.time_at_proper(2.0)
    u = kicked.worldline.state_at(t).u
    assert np.allclose(minkowski_dot(pts.N, u[None, :]), 0, atol=1e-10)
    assert np.allclose(minkowski_dot(pts.N, pts.N), 1, atol=1e-10)
    assert pts.weight.sum() == pytest.approx(4 * np.pi, rel=1e-13)


def test_flux_vanishes_for_inertial_motion():
    for w in (Worldline.at_rest((0, 0, 0), 0.0, 10.0, 0.1),
              Worldline.inertial((0, 0, 0), (0.2, 0.3, 0.0), 0.0, 10.0, 0.1)):
        p = Particle(1.0, 1.0, 1.0, w)
        flux = [worldtube_flux(p, 3.0, e, 8, 16) for e in (0.1, 0.05, 0.025)]
        assert np.max(np.abs(richardson(flux, [0.1, 0.05, 0.025]))) < 1e-6


def test_flux_recovers_self_force(kicked):
    eps = [0.1, 0.05, 0.025]
    tau = 2.0
    flux = [worldtube_flux(kicked, tau, e) for e in eps]
    ref = -self_force_four(kicked, kicked.worldline.time_at_proper(tau)).f
    assert np.allclose(richardson(flux, eps), ref, rtol=0.02, atol=0)


def test_richardson_polynomial():
    eps = np.array([0.1, 0.05, 0.025])
    vals = 3.0 + 2.0 * eps - 5.0 * eps**2
    assert richardson(vals, eps) == pytest.approx(3.0, abs=1e-12)
    vec = np.column_stack([vals, 2 * vals])
    assert np.allclose(richardson(vec, eps), [3.0, 6.0])
