import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from bltp.dynamics import (PREFIX, TRAJECTORY_COLUMNS, ExternalForce, SolverConfig, momentum_to_velocity,
                           picard_window, solve_multi, solve_single)
from bltp.errors import NoContraction, StalledWindow, WorldlineCollision
from bltp.fields import Particle
from bltp.worldline import Worldline

PULSE = ExternalForce.gaussian_pulse([0.5, 0.2, 0.0], 4.0, 0.5)


def charge(e, q0=(0.0, 0.0, 0.0), m=1.0, kappa=1.0):
    return Particle(e, m, kappa, Worldline.at_rest(q0, 0.0))


def impulse_table(force, ts):
    return np.array([force.impulse(0.0, t) for t in ts])


# -- external force -----------------------------------------------------------

def test_momentum_to_velocity_examples():
    assert not np.any(momentum_to_velocity(np.zeros(3)))
    assert np.allclose(momentum_to_velocity(np.array([0.75, 0, 0])), [0.6, 0, 0], atol=1e-16)


@pytest.mark.parametrize("force", [
    ExternalForce.gaussian_pulse([1.0, -2.0, 0.5], 4.0, 0.7),
    ExternalForce.constant_window([0.3, 0.0, -1.0], 1.0, 3.5, 0.8),
])
def test_impulse_closed_form(force):
    for t1 in (0.5, 2.0, 4.0, 6.0, 9.0):
        quad = np.array([integrate.quad(lambda t: force(t)[i], 0.0, t1, points=[1, 1.8, 3.5, 4.3, 4.0],
                                        limit=200, epsabs=1e-14)[0] for i in range(3)])
        assert np.allclose(force.impulse(0.0, t1), quad, atol=1e-12, rtol=0)


@given(st.floats(-5, 20))
def test_forces_are_continuous(t):
    for f in (ExternalForce.gaussian_pulse([1, 0, 0], 6.0, 0.5),
              ExternalForce.constant_window([1, 0, 0], 1.0, 3.0, 0.5)):
        eps = 1e-9
        assert np.max(np.abs(f(t + eps) - f(t - eps))) < 1e-7


def test_force_vanishes_before_onset():
    f = ExternalForce.gaussian_pulse([1, 1, 1], 6.0, 0.5)
    assert f.onset == 3.0
    assert not np.any(f(np.linspace(-10, 3.0, 50)))
    assert math.isinf(ExternalForce.zero().onset)


def test_force_validation():
    with pytest.raises(ValueError):
        ExternalForce("laser")
    with pytest.raises(ValueError):
        ExternalForce.constant_window([1, 0, 0], 1.0, 1.2, 0.5)
    with pytest.raises(ValueError):
        ExternalForce.gaussian_pulse([1, 0, 0], 1.0, -0.5)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(h=0.1, delta=0.2)
    with pytest.raises(ValueError):
        SolverConfig(picard_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(A0=1.0, t_end=0.5)
    assert SolverConfig(t_end=1.0, h=0.01).n_steps == 100


def test_force_before_a0_rejected():
    with pytest.raises(ValueError):
        solve_single(charge(1.0), ExternalForce.gaussian_pulse([1, 0, 0], 1.0, 0.5), SolverConfig(t_end=2.0))


# -- single particle ----------------------------------------------------------

def test_zero_force_keeps_rest():
    r = solve_single(charge(1.0), ExternalForce.zero(), SolverConfig(t_end=3.0))
    assert not np.any(r.p[0]) and not np.any(r.q[0])


def test_neutral_particle_follows_impulse():
    r = solve_single(charge(0.0), PULSE, SolverConfig(t_end=6.0))
    assert np.allclose(r.p[0], impulse_table(PULSE, r.t), atol=1e-14, rtol=0)
    assert not np.any(r.E_self[0])


@pytest.fixture(scope="module")
def pulse_runs():
    long = solve_single(charge(1.0), PULSE, SolverConfig(t_end=10.0))
    short = solve_single(charge(1.0), PULSE, SolverConfig(t_end=6.0))
    return long, short


def test_zero_past_exact(pulse_runs):
    long, _ = pulse_runs
    before = long.t <= PULSE.onset
    assert before.sum() > 100
    assert not np.any(long.p[0][before]) and not np.any(long.E_self[0][before])


def test_causality_of_extension(pulse_runs):
    long, short = pulse_runs
    n = short.t.size
    for a, b in ((long.p, short.p), (long.q, short.q), (long.E_self, short.E_self), (long.B_self, short.B_self)):
        assert np.array_equal(a[0][:n], b[0])


def test_contraction_log(pulse_runs):
    long, _ = pulse_runs
    assert long.contraction_log
    for entry in long.contraction_log:
        assert entry["ratio"] < 1
        assert entry["residual"] <= SolverConfig().picard_tol
    assert len(long.tail_bounds) == len(long.contraction_log)
    assert max(long.tail_bounds) <= SolverConfig().tail_tol


def test_subluminal(pulse_runs):
    long, _ = pulse_runs
    assert np.all(np.linalg.norm(long.v[0], axis=1) < 1)


def test_self_field_damps_motion(pulse_runs):
    long, _ = pulse_runs
    free = impulse_table(PULSE, long.t)
    # radiation reaction and the induced mass both reduce the final momentum
    assert np.linalg.norm(long.p[0][-1]) < np.linalg.norm(free[-1])


def test_result_rows(pulse_runs):
    long, _ = pulse_runs
    rows = long.rows()
    assert rows.shape == (long.t.size, len(TRAJECTORY_COLUMNS))
    assert np.array_equal(rows[:, 4:7], long.p[0])
    w = long.worldlines[0]
    assert w.acc is not None and np.array_equal(w.q, long.q[0])


def test_grid_refinement():
    pts = [2.5, 4.0, 6.0]
    vals = []
    for h in (0.04, 0.02, 0.01):
        r = solve_single(charge(1.0), PULSE, SolverConfig(t_end=6.0, h=h))
        vals.append(r.p[0][np.searchsorted(r.t, pts)])
    d1 = np.max(np.abs(vals[0] - vals[1]))
    d2 = np.max(np.abs(vals[1] - vals[2]))
    assert np.log2(d1 / d2) >= 1.8


# -- picard_window ------------------------------------------------------------

def test_picard_window_zero_history():
    cfg = SolverConfig(t_end=2.0)
    w = picard_window(charge(1.0), ExternalForce.zero(), 0.0, 0.25, cfg)
    assert w.t_end == pytest.approx(0.25) and not np.any(w.p)


def test_picard_window_neutral():
    cfg = SolverConfig(t_end=2.0)
    force = ExternalForce.constant_window([0.2, 0, 0], 0.0, 0.5, 0.2)
    w = picard_window(charge(0.0), force, 0.0, 0.25, cfg)
    assert np.allclose(w.p, impulse_table(force, w.t), atol=1e-11, rtol=0)


def test_picard_window_chain_matches_solver():
    force = ExternalForce.gaussian_pulse([0.5, 0.2, 0.0], 1.5, 0.25)
    cfg = SolverConfig(t_end=2.0)
    p = charge(1.0)
    A = 0.0
    while A < 1.999:
        w = picard_window(p, force, A, 0.25, cfg)
        p = p.with_worldline(w)
        A = w.t_end
    ref = solve_single(charge(1.0), force, cfg)
    assert np.allclose(p.worldline.p, ref.p[0], atol=1e-12, rtol=0)


def test_picard_window_no_contraction():
    cfg = SolverConfig(t_end=4.0, picard_max_iter=2, picard_tol=1e-14)
    strong = ExternalForce.gaussian_pulse([5.0, 0, 0], 1.0, 0.1)
    with pytest.raises(NoContraction):
        picard_window(charge(3.0, m=0.1), strong, 0.0, 1.0, cfg)


def test_stalled_window():
    cfg = SolverConfig(t_end=2.0, picard_max_iter=2, picard_tol=1e-300)
    with pytest.raises(StalledWindow):
        solve_single(charge(1.0), ExternalForce.gaussian_pulse([1.0, 0, 0], 1.0, 0.1), cfg)


# -- several particles ----------------------------------------------------------

def test_two_neutral_particles_are_independent():
    cfg = SolverConfig(t_end=5.0)
    other = ExternalForce.constant_window([0, 0.3, 0], 0.5, 2.0, 0.5)
    r = solve_multi([charge(0.0), charge(0.0, (3, 0, 0))], [PULSE, other], cfg)
    assert np.allclose(r.p[0], impulse_table(PULSE, r.t), atol=1e-10, rtol=0)
    assert np.allclose(r.p[1], impulse_table(other, r.t), atol=1e-10, rtol=0)


def test_neutral_partner_changes_nothing():
    cfg = SolverConfig(t_end=5.0)
    r = solve_multi([charge(1.0), charge(0.0, (3, 0, 0))], [PULSE, PULSE], cfg)
    single = solve_single(charge(1.0), PULSE, cfg)
    assert np.array_equal(r.p[0], single.p[0])
    assert np.allclose(r.p[1], impulse_table(PULSE, r.t), atol=1e-10, rtol=0)


def test_initial_mutual_force_is_static_yukawa_corrected_coulomb():
    d = 50.0
    cfg = SolverConfig(t_end=0.5)
    r = solve_multi([charge(1.0), charge(-1.0, (d, 0, 0))], [ExternalForce.zero()] * 2, cfg)
    expected = (1 - (1 + d) * np.exp(-d)) / d**2
    force_on_0 = 1.0 * r.E_ext[0][1]
    assert np.linalg.norm(force_on_0) == pytest.approx(expected, rel=1e-4)
    assert force_on_0[0] > 0  # attraction towards the partner
    assert r.E_ext[1][1][0] == pytest.approx(force_on_0[0], rel=1e-10)


def test_collision_detection():
    cfg = SolverConfig(t_end=1.0, min_separation=0.5)
    with pytest.raises(WorldlineCollision):
        solve_multi([charge(1.0), charge(1.0, (0.2, 0, 0))], [ExternalForce.zero()] * 2, cfg)


def test_prefix_is_internal():
    r = solve_single(charge(1.0), ExternalForce.zero(), SolverConfig(t_end=1.0))
    assert r.t[0] == 0.0 and r.t.size == 101 and PREFIX > 5
