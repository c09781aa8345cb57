"""Classical particle under a potential and the friction force ``F = -k v``.

The equation of motion is ``m dv/dt = -grad V(q) - k v``.  Alongside ``q``
and ``v`` the integrator carries the nonconservative work

    w_nc(t) = int_0^t F_nc . v dt = -k int_0^t |v|**2 dt,

which enters the general Lagrangian ``L = T - V - w_nc`` and the action
``S = int L dt``.  The reference point of the work integral is the initial
position of the trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NumericalFailure, PhysicsParams, Potential, PreconditionError

__all__ = [
    "ClassicalState", "Trajectory", "EhrenfestReport", "generalized_force",
    "friction_force", "eom_rhs", "integrate", "lagrangian_general",
    "euler_lagrange_residual", "compare_ehrenfest", "damped_oscillator_exact",
]


@dataclass(frozen=True)
class ClassicalState:
    q: np.ndarray
    v: np.ndarray
    t: float = 0.0
    w_nc: float = 0.0

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if q.shape != v.shape or q.ndim != 1 or not 1 <= q.size <= 3:
            raise PreconditionError(
                f"q and v must be matching vectors of 1-3 components, got {q.shape} and {v.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))
                and np.isfinite(self.t) and np.isfinite(self.w_nc)):
            raise PreconditionError("classical state has non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    w_nc: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray
    lagrangian: np.ndarray
    action: np.ndarray

    def __len__(self):
        return self.t.size

    def state(self, i: int) -> ClassicalState:
        return ClassicalState(self.q[i], self.v[i], float(self.t[i]), float(self.w_nc[i]))

    @property
    def energy(self) -> np.ndarray:
        return self.kinetic + self.potential

    def subsample(self, step: int) -> "Trajectory":
        """Every ``step``-th sample, always keeping the last one."""
        idx = np.arange(0, len(self), step)
        if idx[-1] != len(self) - 1:
            idx = np.append(idx, len(self) - 1)
        return Trajectory(*(getattr(self, f)[idx] for f in self.__dataclass_fields__))

    def rows(self):
        """Yield ``(t, q..., v..., T, V, L, S, w_nc)`` per sample."""
        for i in range(len(self)):
            yield [self.t[i], *self.q[i], *self.v[i], self.kinetic[i],
                   self.potential[i], self.lagrangian[i], self.action[i], self.w_nc[i]]


def generalized_force(forces, jacobian) -> np.ndarray:
    """``Q_j = sum_i F_i . dr_i/dq_j``.

    Parameters
    ----------
    forces : array_like, shape (n_particles, n_cart)
        Cartesian force on each particle; a 1-D array is one particle.
    jacobian : array_like, shape (n_particles, n_cart, n_coords)
        ``jacobian[i, :, j]`` is ``dr_i/dq_j``.  A 2-D array is one particle.
    """
    f = np.atleast_2d(np.asarray(forces, dtype=float))
    jac = np.asarray(jacobian, dtype=float)
    if jac.ndim == 2:
        jac = jac[None]
    if jac.ndim != 3 or f.shape != jac.shape[:2]:
        raise PreconditionError(
            f"force shape {np.shape(forces)} incompatible with jacobian {np.shape(jacobian)}")
    return np.einsum("ia,iaj->j", f, jac)


def friction_force(v, params: PhysicsParams) -> np.ndarray:
    return -params.friction_k * np.asarray(v, dtype=float)


def eom_rhs(state: ClassicalState, potential: Potential, params: PhysicsParams):
    """Return ``(dq/dt, dv/dt)`` for ``m dv/dt = -grad V - k v``."""
    grad = potential.gradient_at(state.q, params)
    accel = (-grad + friction_force(state.v, params)) / params.mass
    return state.v.copy(), accel


def lagrangian_general(state: ClassicalState, potential: Potential,
                       params: PhysicsParams) -> float:
    """``L = T - V - w_nc``; equals ``T - V`` when no work has been done."""
    kinetic = 0.5 * params.mass * float(state.v @ state.v)
    return kinetic - potential.value_at(state.q, params) - state.w_nc


def integrate(state: ClassicalState, potential: Potential, params: PhysicsParams,
              dt: float, n_steps: int) -> Trajectory:
    """Fixed-step RK4 on ``(q, v, w_nc, S)``.

    Work and action are integrated as extra components of the same RK4
    system, so their quadrature is Simpson-consistent with the motion.
    The action restarts at zero; ``w_nc`` continues from ``state``.
    """
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    if n_steps < 0:
        raise PreconditionError(f"n_steps must be >= 0, got {n_steps}")
    n = state.q.size
    m, k = params.mass, params.friction_k

    def rhs(y):
        q, v, w = y[:n], y[n:2 * n], y[2 * n]
        grad = potential.gradient_at(q, params)
        vv = float(v @ v)
        lag = 0.5 * m * vv - potential.value_at(q, params) - w
        out = np.empty_like(y)
        out[:n] = v
        out[n:2 * n] = (-grad - k * v) / m
        out[2 * n] = -k * vv
        out[2 * n + 1] = lag
        return out

    ys = np.empty((n_steps + 1, 2 * n + 2))
    ys[0] = np.concatenate([state.q, state.v, [state.w_nc, 0.0]])
    y = ys[0].copy()
    for i in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericalFailure(f"classical integration diverged at step {i + 1}")
        ys[i + 1] = y

    t = state.t + dt * np.arange(n_steps + 1)
    q, v, w, s = ys[:, :n], ys[:, n:2 * n], ys[:, 2 * n], ys[:, 2 * n + 1]
    kin = 0.5 * m * np.sum(v ** 2, axis=1)
    pot = np.array([potential.value_at(qi, params) for qi in q])
    return Trajectory(t, q, v, w, kin, pot, kin - pot - w, s)


def euler_lagrange_residual(traj: Trajectory, potential: Potential,
                            params: PhysicsParams) -> np.ndarray:
    """Residual of ``d/dt dL/dv - dL/dq = Q_nc`` at interior samples.

    Time derivatives are centered differences of the stored velocities.
    Returns an array of shape ``(len(traj) - 2, n_coords)``.
    """
    if len(traj) < 3:
        raise PreconditionError("need at least three samples")
    dt = np.diff(traj.t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise PreconditionError("residual check needs uniform time steps")
    momentum = params.mass * traj.v
    dpdt = (momentum[2:] - momentum[:-2]) / (2 * dt[0])
    grad = np.array([potential.gradient_at(qi, params) for qi in traj.q[1:-1]])
    return dpdt + grad - friction_force(traj.v[1:-1], params)


def damped_oscillator_exact(t, q0: float, v0: float, omega: float, params: PhysicsParams):
    """Closed-form underdamped solution of ``q'' + (k/m) q' + omega**2 q = 0``."""
    gamma = params.friction_k / (2 * params.mass)
    if gamma >= omega:
        raise PreconditionError("closed form implemented for the underdamped case only")
    wd = np.sqrt(omega ** 2 - gamma ** 2)
    t = np.asarray(t, dtype=float)
    b = (v0 + gamma * q0) / wd
    return np.exp(-gamma * t) * (q0 * np.cos(wd * t) + b * np.sin(wd * t))


@dataclass(frozen=True)
class EhrenfestReport:
    max_deviation: float
    rms_deviation: float
    deviation: np.ndarray


def compare_ehrenfest(times, mean_x, traj: Trajectory, rtol: float = 1e-9) -> EhrenfestReport:
    """Deviation between quantum ``<x>(t)`` and classical ``q(t)`` on shared time stamps.

    ``mean_x`` has shape ``(n_times,)`` or ``(n_times, n_coords)``.
    """
    times = np.asarray(times, dtype=float)
    mx = np.asarray(mean_x, dtype=float)
    if mx.ndim == 1:
        mx = mx[:, None]
    if times.shape != traj.t.shape or not np.allclose(times, traj.t, rtol=rtol, atol=1e-12):
        raise PreconditionError("quantum and classical time grids do not match")
    if mx.shape != traj.q.shape:
        raise PreconditionError(f"<x> shape {mx.shape} does not match q shape {traj.q.shape}")
    dev = np.linalg.norm(mx - traj.q, axis=1)
    return EhrenfestReport(float(np.max(dev)), float(np.sqrt(np.mean(dev ** 2))), dev)
