import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncwave.classical import (ClassicalState, compare_ehrenfest, damped_oscillator_exact,
                              eom_rhs, euler_lagrange_residual, friction_force,
                              generalized_force, integrate, lagrangian_general)
from ncwave.core import (Free, Grid, Harmonic, NumericalFailure, PhysicsParams,
                         PreconditionError, Sampled)

DAMPED = PhysicsParams(friction_k=0.2)


def test_state_invariants():
    with pytest.raises(PreconditionError):
        ClassicalState([0.0, 1.0], [0.0])
    with pytest.raises(PreconditionError):
        ClassicalState([np.nan], [0.0])
    with pytest.raises(PreconditionError):
        ClassicalState(np.zeros(4), np.zeros(4))


# --- generalized forces ----------------------------------------------------------------

def test_generalized_force_identity_jacobian():
    f = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(generalized_force(f, np.eye(3)), f)


def test_generalized_force_conservative_matches_gradient():
    # V(x, y, z) = x^2 y + sin z, F = -grad V; compare Q with a finite-difference gradient
    V = lambda r: r[0] ** 2 * r[1] + np.sin(r[2])
    r = np.array([0.3, -1.2, 0.7])
    force = -np.array([2 * r[0] * r[1], r[0] ** 2, np.cos(r[2])])
    q = generalized_force(force, np.eye(3))
    h = 1e-6
    fd = np.array([(V(r + h * e) - V(r - h * e)) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(q, -fd, rtol=1e-6)


def test_generalized_force_polar_coordinates():
    # r = (rho cos phi, rho sin phi): Q_rho = F.e_rho, Q_phi = rho F.e_phi
    rho, phi = 2.0, 0.4
    jac = np.array([[np.cos(phi), -rho * np.sin(phi)],
                    [np.sin(phi), rho * np.cos(phi)]])
    f = np.array([1.0, 3.0])
    q = generalized_force(f, jac)
    assert q[0] == pytest.approx(f @ [np.cos(phi), np.sin(phi)])
    assert q[1] == pytest.approx(rho * (f @ [-np.sin(phi), np.cos(phi)]))


def test_generalized_force_two_particles():
    f = np.array([[1.0, 0.0], [0.0, 2.0]])
    jac = np.stack([np.eye(2), np.eye(2)])
    np.testing.assert_allclose(generalized_force(f, jac), [1.0, 2.0])


def test_generalized_force_friction():
    v = np.array([0.5, -1.0])
    np.testing.assert_allclose(generalized_force(friction_force(v, DAMPED), np.eye(2)), -0.2 * v)


def test_generalized_force_shape_mismatch():
    with pytest.raises(PreconditionError):
        generalized_force(np.ones(3), np.eye(2))


# --- equations of motion --------------------------------------------------------------------

def test_eom_free_particle():
    dq, dv = eom_rhs(ClassicalState([1.0], [2.0]), Free(), PhysicsParams())
    np.testing.assert_array_equal(dq, [2.0])
    np.testing.assert_array_equal(dv, [0.0])


def test_eom_harmonic():
    _, dv = eom_rhs(ClassicalState([0.7], [0.0]), Harmonic(1.5), PhysicsParams(mass=3.0))
    np.testing.assert_allclose(dv, [-1.5 ** 2 * 0.7])


def test_friction_decay_of_velocity():
    p = PhysicsParams(mass=2.0, friction_k=0.6)
    _, dv = eom_rhs(ClassicalState([0.0], [1.5]), Free(), p)
    np.testing.assert_allclose(dv, [-0.3 * 1.5])
    traj = integrate(ClassicalState([0.0], [1.5]), Free(), p, 1e-2, 300)
    np.testing.assert_allclose(traj.v[:, 0], 1.5 * np.exp(-0.3 * traj.t), rtol=1e-9)


def test_sampled_gradient_outside_domain():
    g = Grid(-1.0, 1.0, 32)
    pot = Sampled(g.axes[0] ** 2, g)
    with pytest.raises(PreconditionError):
        eom_rhs(ClassicalState([5.0], [0.0]), pot, PhysicsParams())


# --- integration -------------------------------------------------------------------------------

def test_damped_oscillator_closed_form():
    traj = integrate(ClassicalState([1.0], [0.0]), Harmonic(1.0), DAMPED, 1e-3, 1000)
    exact = damped_oscillator_exact(1.0, 1.0, 0.0, 1.0, DAMPED)
    assert traj.q[-1, 0] == pytest.approx(exact, abs=1e-8)
    assert exact == pytest.approx(0.5690, abs=1e-4)


def test_closed_form_satisfies_ode():
    t = np.linspace(0, 3, 301)
    h = 1e-4
    f = lambda s: damped_oscillator_exact(s, 0.4, -0.3, 1.3, DAMPED)
    acc = (f(t + h) - 2 * f(t) + f(t - h)) / h ** 2
    vel = (f(t + h) - f(t - h)) / (2 * h)
    np.testing.assert_allclose(acc + 0.2 * vel + 1.69 * f(t), 0, atol=1e-6)
    assert f(0.0) == pytest.approx(0.4)
    assert vel[0] == pytest.approx(-0.3, abs=1e-7)


def test_energy_conserved_without_friction():
    traj = integrate(ClassicalState([1.0], [0.3]), Harmonic(1.0), PhysicsParams(), 1e-3, 10_000)
    assert np.max(np.abs(traj.energy - traj.energy[0])) <= 1e-9


def test_energy_balance_with_friction():
    traj = integrate(ClassicalState([1.0, -0.5], [0.0, 0.8]), Harmonic(1.0),
                     DAMPED.replace(dim=2), 1e-3, 3000)
    np.testing.assert_allclose(traj.energy - traj.energy[0], traj.w_nc, atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(q0=st.floats(-2, 2), v0=st.floats(-2, 2), k=st.floats(0, 1.5))
def test_work_non_increasing(q0, v0, k):
    traj = integrate(ClassicalState([q0], [v0]), Harmonic(1.0),
                     PhysicsParams(friction_k=k), 1e-2, 200)
    assert traj.w_nc[0] == 0.0
    assert np.all(np.diff(traj.w_nc) <= 1e-15)
    assert np.all(traj.lagrangian >= traj.kinetic - traj.potential - 1e-15)


def test_rk4_fourth_order():
    errs = []
    for dt in (0.1, 0.05, 0.025):
        n = round(4.0 / dt)
        traj = integrate(ClassicalState([1.0], [0.0]), Harmonic(1.0), DAMPED, dt, n)
        errs.append(abs(traj.q[-1, 0] - damped_oscillator_exact(4.0, 1.0, 0.0, 1.0, DAMPED)))
    for a, b in zip(errs, errs[1:]):
        assert 14 <= a / b <= 18


def test_integration_divergence_detected():
    class Exploding(Free):
        def gradient_at(self, q, params):
            return np.full(np.shape(q), -np.inf)

    with pytest.raises(NumericalFailure):
        with np.errstate(invalid="ignore"):
            integrate(ClassicalState([0.0], [0.0]), Exploding(), PhysicsParams(), 0.1, 5)


def test_integrate_rejects_bad_step():
    with pytest.raises(PreconditionError):
        integrate(ClassicalState([0.0], [0.0]), Free(), PhysicsParams(), 0.0, 5)


# --- Lagrangian and action -------------------------------------------------------------------------

def test_lagrangian_reduces_to_t_minus_v():
    s = ClassicalState([0.5], [1.2])
    p = PhysicsParams(mass=2.0)
    assert lagrangian_general(s, Harmonic(1.0), p) == pytest.approx(0.5 * 2 * 1.44 - 0.5 * 2 * 0.25)


def test_lagrangian_at_rest_at_minimum():
    assert lagrangian_general(ClassicalState([0.0], [0.0]), Harmonic(2.0), PhysicsParams()) == 0.0


def test_lagrangian_includes_work():
    s = ClassicalState([0.0], [1.0], w_nc=-0.3)
    assert lagrangian_general(s, Free(), PhysicsParams()) == pytest.approx(0.5 + 0.3)


def test_trajectory_lagrangian_column():
    traj = integrate(ClassicalState([1.0], [0.0]), Harmonic(1.0), DAMPED, 1e-2, 100)
    for i in (0, 50, 100):
        assert traj.lagrangian[i] == pytest.approx(
            lagrangian_general(traj.state(i), Harmonic(1.0), DAMPED), abs=1e-14)


def test_action_additivity():
    s0 = ClassicalState([1.0], [0.2])
    full = integrate(s0, Harmonic(1.0), DAMPED, 1e-3, 2000)
    first = integrate(s0, Harmonic(1.0), DAMPED, 1e-3, 800)
    second = integrate(first.state(-1), Harmonic(1.0), DAMPED, 1e-3, 1200)
    assert first.action[-1] + second.action[-1] == pytest.approx(full.action[-1], abs=1e-10)
    assert second.t[-1] == pytest.approx(full.t[-1])


def test_euler_lagrange_residual_conservative():
    traj = integrate(ClassicalState([1.0], [0.0]), Harmonic(1.0), PhysicsParams(), 1e-3, 5000)
    res = euler_lagrange_residual(traj, Harmonic(1.0), PhysicsParams())
    assert np.sqrt(np.mean(res ** 2)) <= 1e-6


def test_euler_lagrange_residual_with_friction():
    traj = integrate(ClassicalState([1.0], [0.0]), Harmonic(1.0), DAMPED, 1e-3, 3000)
    res = euler_lagrange_residual(traj, Harmonic(1.0), DAMPED)
    assert np.sqrt(np.mean(res ** 2)) <= 1e-6
    undamped = euler_lagrange_residual(traj, Harmonic(1.0), PhysicsParams())
    assert np.sqrt(np.mean(undamped ** 2)) > 1e-2


# --- Ehrenfest comparison ---------------------------------------------------------------------------------

def test_compare_identical_inputs():
    traj = integrate(ClassicalState([1.0], [0.0]), Harmonic(1.0), DAMPED, 1e-2, 50)
    rep = compare_ehrenfest(traj.t, traj.q[:, 0], traj)
    assert rep.max_deviation == 0.0 and rep.rms_deviation == 0.0


def test_compare_time_mismatch():
    traj = integrate(ClassicalState([1.0], [0.0]), Harmonic(1.0), DAMPED, 1e-2, 50)
    with pytest.raises(PreconditionError):
        compare_ehrenfest(traj.t * 1.01, traj.q[:, 0], traj)
    with pytest.raises(PreconditionError):
        compare_ehrenfest(traj.t[:-1], traj.q[:-1, 0], traj)


def test_subsample_keeps_endpoints():
    traj = integrate(ClassicalState([1.0], [0.0]), Harmonic(1.0), DAMPED, 1e-2, 10)
    sub = traj.subsample(4)
    np.testing.assert_allclose(sub.t, [0.0, 0.04, 0.08, 0.10])
    assert sub.action[-1] == traj.action[-1]
