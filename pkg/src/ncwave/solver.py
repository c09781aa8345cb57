"""Time integrators for ``i hbar dpsi/dt = (H0 - 1j*hbar*d*k/m) psi``.

Three steppers are provided and are expected to agree with each other:

* Crank-Nicolson with a 3-point finite-difference Laplacian (1-D only),
* Strang split-step with a spectral kinetic step,
* the factored form ``exp(-d*k*t/m) * psi0(t)`` where ``psi0`` evolves with
  ``k = 0``.

Because the friction term is a multiple of the identity it commutes with
everything, so the last two are equal up to round-off.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.linalg import eigh
from scipy.linalg.lapack import zgttrf, zgttrs

from .core import (Grid, NumericalFailure, ObservableRecord, PhysicsParams,
                   Potential, PreconditionError, Wavefunction, damping_rate,
                   observables)

__all__ = [
    "Integrator", "EvolutionPlan", "CrankNicolson", "step_crank_nicolson",
    "step_split_fourier", "step_exact_factored", "evolve", "make_stepper",
    "fd_hamiltonian_k0", "spectral_hamiltonian_k0", "exact_factored_reference",
]

PIVOT_TOL = 1e-14
STEP_GUARD = 0.1


class Integrator(enum.Enum):
    CRANK_NICOLSON = "crank_nicolson"
    SPLIT_STEP_STRANG = "split_step"
    EXACT_FACTORED = "exact_factored"

    @classmethod
    def parse(cls, name) -> "Integrator":
        if isinstance(name, cls):
            return name
        aliases = {"cn": cls.CRANK_NICOLSON, "strang": cls.SPLIT_STEP_STRANG,
                   "split_fourier": cls.SPLIT_STEP_STRANG, "exact": cls.EXACT_FACTORED}
        key = str(name).lower().replace("-", "_")
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise PreconditionError(f"unknown integrator {name!r}") from None


@dataclass(frozen=True)
class EvolutionPlan:
    dt: float
    n_steps: int
    record_every: int = 1
    integrator: Integrator = Integrator.SPLIT_STEP_STRANG

    def __post_init__(self):
        object.__setattr__(self, "integrator", Integrator.parse(self.integrator))
        if not self.dt > 0:
            raise PreconditionError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise PreconditionError(f"n_steps must be >= 0, got {self.n_steps}")
        if self.record_every < 1:
            raise PreconditionError(f"record_every must be >= 1, got {self.record_every}")

    def validate(self, params: PhysicsParams) -> None:
        if self.integrator is Integrator.EXACT_FACTORED:
            return
        ratio = params.friction_k * self.dt / params.mass
        if ratio > STEP_GUARD:
            raise PreconditionError(
                f"k*dt/m = {ratio:g} exceeds {STEP_GUARD}; reduce dt")


# --- split step ------------------------------------------------------------

def _strang_k0(a: np.ndarray, grid: Grid, v: np.ndarray, params: PhysicsParams,
               dt: float) -> np.ndarray:
    axes = tuple(range(grid.ndim))
    half = np.exp(-0.5j * dt * v / params.hbar)
    kinetic = np.exp(-0.5j * params.hbar * dt * grid.q_squared / params.mass)
    out = half * a
    out = np.fft.ifftn(kinetic * np.fft.fftn(out, axes=axes), axes=axes)
    return half * out


def step_split_fourier(psi: Wavefunction, potential: Potential,
                       params: PhysicsParams, dt: float) -> Wavefunction:
    """Strang step: half potential phase, exact kinetic step, half potential phase.

    The friction term is applied as the scalar ``exp(-d*k*dt/m)``.
    """
    grid = psi.grid
    grid.check_params(params)
    v = potential.values(grid, params)
    out = _strang_k0(psi.amplitudes, grid, v, params, dt)
    return psi.evolved(np.exp(-damping_rate(params) * dt) * out, dt)


def step_exact_factored(psi: Wavefunction, potential: Potential,
                        params: PhysicsParams, dt: float) -> Wavefunction:
    """Advance the ``k = 0`` equation, then rescale by ``exp(-d*k*dt/m)``."""
    grid = psi.grid
    grid.check_params(params)
    base = step_split_fourier(psi, potential, params.replace(friction_k=0.0), dt)
    return psi.evolved(np.exp(-damping_rate(params) * dt) * base.amplitudes, dt)


# --- Crank-Nicolson ---------------------------------------------------------

class CrankNicolson:
    """Prepared Crank-Nicolson propagator for a fixed potential and ``dt``.

    Solves ``(1 + i dt H/2hbar) psi' = (1 - i dt H/2hbar) psi``.  The cyclic
    tridiagonal system is reduced to a tridiagonal one plus a rank-1
    (Sherman-Morrison) correction for the periodic wrap.
    """

    def __init__(self, grid: Grid, potential: Potential, params: PhysicsParams,
                 dt: float):
        if grid.ndim != 1:
            raise PreconditionError("Crank-Nicolson is implemented for 1-D grids only")
        grid.check_params(params)
        self.grid = grid
        self.dt = dt
        n = grid.n_points[0]
        dx = grid.spacing[0]
        hbar, m = params.hbar, params.mass
        v = potential.values(grid, params).astype(complex)

        # H as a periodic tridiagonal: off-diagonal t, diagonal h
        t = -hbar ** 2 / (2 * m * dx ** 2)
        h = -2 * t + v - 1j * hbar * damping_rate(params)
        c = 0.5j * dt / hbar
        self._rhs_diag = 1 - c * h
        self._rhs_off = -c * t

        off = c * t
        diag = 1 + c * h
        # Sherman-Morrison: A = T + u v^T with u = (g, 0.., off), v = (1, 0.., off/g)
        gamma = -diag[0]
        tdiag = diag.copy()
        tdiag[0] -= gamma
        tdiag[-1] -= off * off / gamma
        sub = np.full(n - 1, off, dtype=complex)
        sup = np.full(n - 1, off, dtype=complex)
        self._check_pivots(sub, tdiag, sup)

        dl, d, du, du2, ipiv, info = zgttrf(sub, tdiag, sup)
        if info != 0:
            raise NumericalFailure(f"Crank-Nicolson matrix is singular (info={info})")
        self._lu = (dl, d, du, du2, ipiv)

        u = np.zeros(n, dtype=complex)
        u[0], u[-1] = gamma, off
        self._vvec = np.zeros(n, dtype=complex)
        self._vvec[0], self._vvec[-1] = 1.0, off / gamma
        self._z = self._solve(u)
        denom = 1 + self._vvec @ self._z
        if abs(denom) < PIVOT_TOL:
            raise NumericalFailure("Crank-Nicolson periodic correction is singular")
        self._denom = denom

    @staticmethod
    def _check_pivots(sub, diag, sup):
        # pivots of an unpivoted LU sweep, compared with the row magnitude
        n = diag.size
        pivot = diag[0]
        for i in range(n):
            if i > 0:
                pivot = diag[i] - sub[i - 1] * sup[i - 1] / pivot
            row = abs(diag[i]) + (abs(sub[i - 1]) if i > 0 else 0.0) \
                + (abs(sup[i]) if i < n - 1 else 0.0)
            if abs(pivot) < PIVOT_TOL * row:
                raise NumericalFailure(f"Crank-Nicolson pivot {abs(pivot):g} vanishes at row {i}")

    def _solve(self, b):
        x, info = zgttrs(*self._lu, b)
        if info != 0:
            raise NumericalFailure(f"tridiagonal solve failed (info={info})")
        return x

    def apply(self, a: np.ndarray) -> np.ndarray:
        rhs = self._rhs_diag * a + self._rhs_off * (np.roll(a, 1) + np.roll(a, -1))
        y = self._solve(rhs)
        return y - (self._vvec @ y) / self._denom * self._z

    def __call__(self, psi: Wavefunction) -> Wavefunction:
        return psi.evolved(self.apply(psi.amplitudes), self.dt)


def step_crank_nicolson(psi: Wavefunction, potential: Potential,
                        params: PhysicsParams, dt: float) -> Wavefunction:
    return CrankNicolson(psi.grid, potential, params, dt)(psi)


# --- reference propagation ------------------------------------------------

def fd_hamiltonian_k0(grid: Grid, potential: Potential, params: PhysicsParams) -> np.ndarray:
    """Dense 1-D ``H0`` with the periodic 3-point Laplacian used by Crank-Nicolson."""
    n = grid.n_points[0]
    dx = grid.spacing[0]
    t = -params.hbar ** 2 / (2 * params.mass * dx ** 2)
    h = np.diag(-2 * t + potential.values(grid, params))
    idx = np.arange(n)
    h[idx, (idx + 1) % n] += t
    h[idx, (idx - 1) % n] += t
    return h


def spectral_hamiltonian_k0(grid: Grid, potential: Potential,
                            params: PhysicsParams) -> np.ndarray:
    """Dense 1-D ``H0`` with the spectral kinetic operator."""
    n = grid.n_points[0]
    f = np.fft.fft(np.eye(n), axis=0)
    kin = np.fft.ifft(params.hbar ** 2 / (2 * params.mass) * grid.q_squared[:, None] * f, axis=0)
    h = kin + np.diag(potential.values(grid, params))
    return 0.5 * (h + h.conj().T)


def exact_factored_reference(psi: Wavefunction, potential: Potential,
                             params: PhysicsParams, t: float,
                             laplacian: str = "spectral") -> Wavefunction:
    """Exact-in-time solution of the spatially discretized equation (1-D).

    Diagonalizes the Hermitian ``k = 0`` operator, propagates exactly, and
    applies the scalar factor ``exp(-d*k*t/m)``.  Used as the reference for
    convergence-order checks of the time steppers.
    """
    grid = psi.grid
    grid.check_params(params)
    if laplacian == "spectral":
        h = spectral_hamiltonian_k0(grid, potential, params)
    elif laplacian == "fd":
        h = fd_hamiltonian_k0(grid, potential, params)
    else:
        raise PreconditionError(f"unknown laplacian {laplacian!r}")
    energies, vecs = eigh(h)
    coeff = vecs.conj().T @ psi.amplitudes
    out = vecs @ (np.exp(-1j * energies * t / params.hbar) * coeff)
    return psi.evolved(np.exp(-damping_rate(params) * t) * out, t)


# --- evolution driver --------------------------------------------------------

Sink = Callable[[ObservableRecord, Wavefunction], None]


def make_stepper(integrator, grid: Grid, potential: Potential,
                 params: PhysicsParams, dt: float) -> Callable[[Wavefunction], Wavefunction]:
    integrator = Integrator.parse(integrator)
    if integrator is Integrator.CRANK_NICOLSON:
        return CrankNicolson(grid, potential, params, dt)
    if integrator is Integrator.SPLIT_STEP_STRANG:
        return lambda psi: step_split_fourier(psi, potential, params, dt)
    return lambda psi: step_exact_factored(psi, potential, params, dt)


def _record(psi, params, potential, sink, records):
    rec = observables(psi, params, potential)
    if not rec.is_finite() or not np.all(np.isfinite(psi.amplitudes)):
        raise NumericalFailure(f"non-finite state or observables at t={psi.time:g}")
    records.append(rec)
    if sink is not None:
        sink(rec, psi)


def evolve(psi0: Wavefunction, potential: Potential, params: PhysicsParams,
           plan: EvolutionPlan, sink: Optional[Sink] = None
           ) -> Tuple[Wavefunction, List[ObservableRecord]]:
    """Apply ``plan.n_steps`` steps, recording at step 0, every
    ``plan.record_every`` steps, and at the final step.

    For ``EXACT_FACTORED`` the ``k = 0`` state is carried separately and the
    factor ``exp(-d*k*t/m)`` is applied at each output time.
    """
    plan.validate(params)
    psi0.grid.check_params(params)
    records: List[ObservableRecord] = []
    _record(psi0, params, potential, sink, records)

    factored = plan.integrator is Integrator.EXACT_FACTORED
    base_params = params.replace(friction_k=0.0) if factored else params
    step = make_stepper(Integrator.SPLIT_STEP_STRANG if factored else plan.integrator,
                        psi0.grid, potential, base_params, plan.dt)
    rate = damping_rate(params)

    state = psi0
    for i in range(1, plan.n_steps + 1):
        try:
            state = Wavefunction(psi0.grid, step(state).amplitudes, psi0.time + i * plan.dt)
        except PreconditionError as exc:
            raise NumericalFailure(f"step {i}: {exc}") from exc
        if i % plan.record_every == 0 or i == plan.n_steps:
            out = state
            if factored:
                out = Wavefunction(state.grid, np.exp(-rate * (state.time - psi0.time))
                                   * state.amplitudes, state.time)
            _record(out, params, potential, sink, records)
    if factored:
        state = Wavefunction(state.grid, np.exp(-rate * (state.time - psi0.time))
                             * state.amplitudes, state.time)
    return state, records
