"""Grids, wavefunctions, potentials and observables on a periodic lattice.

The Hamiltonian used throughout the package is

    H = -hbar**2/(2m) * laplacian + V - 1j * hbar * d * k / m

where ``d`` is the spatial dimension and ``k`` the friction coefficient of a
force ``F = -k v``.  The last term is a constant anti-Hermitian shift; it
damps the norm of the state without affecting its shape.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

__all__ = [
    "NcwaveError", "PreconditionError", "ZeroNormError", "NumericalFailure",
    "PhysicsParams", "Grid", "Wavefunction",
    "Free", "Harmonic", "Barrier", "Sampled", "Potential",
    "ObservableRecord", "init_gaussian", "observables",
    "laplacian", "apply_kinetic", "apply_hamiltonian", "damping_rate",
    "norm",
]

MIN_POINTS = 8
ZERO_NORM = 1e-300


class NcwaveError(Exception):
    """Base class for errors raised by this package."""


class PreconditionError(NcwaveError, ValueError):
    """An input violates a documented precondition or type invariant."""


class ZeroNormError(NcwaveError, ArithmeticError):
    """Normalized observables requested for a state of (numerically) zero norm."""


class NumericalFailure(NcwaveError, ArithmeticError):
    """A solve became singular or the state stopped being finite."""


def _as_tuple(value, dim=None, cast=float):
    if np.ndim(value) == 0:
        return (cast(value),) * (dim or 1)
    out = tuple(cast(v) for v in value)
    if dim is not None and len(out) != dim:
        raise PreconditionError(f"expected {dim} components, got {len(out)}")
    return out


@dataclass(frozen=True)
class PhysicsParams:
    hbar: float = 1.0
    mass: float = 1.0
    friction_k: float = 0.0
    dim: int = 1

    def __post_init__(self):
        if not self.hbar > 0:
            raise PreconditionError(f"hbar must be positive, got {self.hbar}")
        if not self.mass > 0:
            raise PreconditionError(f"mass must be positive, got {self.mass}")
        if not self.friction_k >= 0:
            raise PreconditionError(f"friction_k must be >= 0, got {self.friction_k}")
        if self.dim not in (1, 2, 3):
            raise PreconditionError(f"dim must be 1, 2 or 3, got {self.dim}")

    def replace(self, **changes) -> "PhysicsParams":
        fields = dict(hbar=self.hbar, mass=self.mass,
                      friction_k=self.friction_k, dim=self.dim)
        fields.update(changes)
        return PhysicsParams(**fields)


def damping_rate(params: PhysicsParams) -> float:
    """Amplitude decay rate ``d*k/m``; the norm decays at twice this rate."""
    return params.dim * params.friction_k / params.mass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice, ``n_points[a]`` samples on ``[x_min[a], x_max[a])``."""

    x_min: tuple
    x_max: tuple
    n_points: tuple

    def __post_init__(self):
        n = _as_tuple(self.n_points, cast=int)
        dim = len(n)
        lo = _as_tuple(self.x_min, dim)
        hi = _as_tuple(self.x_max, dim)
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "x_min", lo)
        object.__setattr__(self, "x_max", hi)
        if dim not in (1, 2, 3):
            raise PreconditionError(f"grid must have 1-3 axes, got {dim}")
        for a in range(dim):
            if n[a] < MIN_POINTS:
                raise PreconditionError(f"axis {a}: need >= {MIN_POINTS} points, got {n[a]}")
            if not hi[a] > lo[a]:
                raise PreconditionError(f"axis {a}: x_max must exceed x_min")

    @property
    def ndim(self) -> int:
        return len(self.n_points)

    @property
    def shape(self) -> tuple:
        return self.n_points

    @property
    def size(self) -> int:
        return int(np.prod(self.n_points))

    @property
    def spacing(self) -> tuple:
        return tuple((hi - lo) / n for lo, hi, n in zip(self.x_min, self.x_max, self.n_points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def axes(self) -> tuple:
        return tuple(lo + dx * np.arange(n)
                     for lo, dx, n in zip(self.x_min, self.spacing, self.n_points))

    @cached_property
    def mesh(self) -> tuple:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple:
        """Angular wavenumbers per axis in FFT order, broadcastable against the grid."""
        out = []
        for a, (dx, n) in enumerate(zip(self.spacing, self.n_points)):
            shape = [1] * self.ndim
            shape[a] = n
            out.append((2 * np.pi * np.fft.fftfreq(n, d=dx)).reshape(shape))
        return tuple(out)

    @cached_property
    def q_squared(self) -> np.ndarray:
        return sum(q ** 2 for q in self.wavenumbers)

    def check_params(self, params: PhysicsParams) -> None:
        if params.dim != self.ndim:
            raise PreconditionError(
                f"params.dim={params.dim} does not match a {self.ndim}-axis grid")


@dataclass(frozen=True)
class Wavefunction:
    grid: Grid
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        psi = np.asarray(self.amplitudes, dtype=complex)
        if psi.size != self.grid.size:
            raise PreconditionError(
                f"{psi.size} amplitudes for a grid of {self.grid.size} points")
        psi = psi.reshape(self.grid.shape)
        if not np.all(np.isfinite(psi)):
            raise PreconditionError("wavefunction has non-finite entries")
        object.__setattr__(self, "amplitudes", psi)

    def evolved(self, amplitudes, dt: float) -> "Wavefunction":
        return Wavefunction(self.grid, amplitudes, self.time + dt)


# --- potentials -----------------------------------------------------------

def _center(center, dim):
    return np.asarray(_as_tuple(center, dim))


@dataclass(frozen=True)
class Free:
    def values(self, grid: Grid, params: PhysicsParams) -> np.ndarray:
        return np.zeros(grid.shape)

    def value_at(self, q, params: PhysicsParams) -> float:
        return 0.0

    def gradient_at(self, q, params: PhysicsParams) -> np.ndarray:
        return np.zeros(np.shape(q))


@dataclass(frozen=True)
class Harmonic:
    """``V = m omega**2 |x - center|**2 / 2``."""

    omega: float
    center: Union[float, Sequence[float]] = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise PreconditionError(f"omega must be positive, got {self.omega}")

    def values(self, grid, params):
        c = _center(self.center, grid.ndim)
        r2 = sum((x - ci) ** 2 for x, ci in zip(grid.mesh, c))
        return 0.5 * params.mass * self.omega ** 2 * r2

    def value_at(self, q, params):
        d = np.asarray(q, dtype=float) - _center(self.center, np.size(q))
        return 0.5 * params.mass * self.omega ** 2 * float(d @ d)

    def gradient_at(self, q, params):
        d = np.asarray(q, dtype=float) - _center(self.center, np.size(q))
        return params.mass * self.omega ** 2 * d


@dataclass(frozen=True)
class Barrier:
    """Square barrier of ``height`` on the box ``|x_a - center_a| < half_width``.

    The force is zero away from the walls; the walls themselves carry no
    finite gradient.
    """

    height: float
    half_width: float
    center: Union[float, Sequence[float]] = 0.0

    def __post_init__(self):
        if not self.half_width > 0:
            raise PreconditionError(f"half_width must be positive, got {self.half_width}")

    def _inside(self, coords, c):
        inside = True
        for x, ci in zip(coords, c):
            inside = inside & (np.abs(x - ci) < self.half_width)
        return inside

    def values(self, grid, params):
        c = _center(self.center, grid.ndim)
        return np.where(self._inside(grid.mesh, c), float(self.height), 0.0)

    def value_at(self, q, params):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        return float(self.height) if self._inside(q, _center(self.center, q.size)) else 0.0

    def gradient_at(self, q, params):
        return np.zeros(np.shape(q))


@dataclass(frozen=True, eq=False)
class Sampled:
    """Potential given by its values on a grid.

    Classical evaluation interpolates linearly and differentiates by centered
    differences; points outside ``[x_min, x_max - dx]`` are rejected.
    """

    values_on_grid: np.ndarray
    grid: Grid

    def __post_init__(self):
        v = np.asarray(self.values_on_grid, dtype=float)
        if v.size != self.grid.size:
            raise PreconditionError(
                f"sampled potential has {v.size} values for {self.grid.size} grid points")
        object.__setattr__(self, "values_on_grid", v.reshape(self.grid.shape))

    def values(self, grid, params):
        if grid.shape != self.grid.shape:
            raise PreconditionError("sampled potential was built for a different grid")
        return self.values_on_grid

    def _interp(self, q):
        from scipy.interpolate import RegularGridInterpolator
        q = np.atleast_1d(np.asarray(q, dtype=float))
        interp = RegularGridInterpolator(self.grid.axes, self.values_on_grid,
                                         bounds_error=True)
        return interp, q

    def value_at(self, q, params):
        interp, q = self._interp(q)
        try:
            return float(interp(q[None, :])[0])
        except ValueError as exc:
            raise PreconditionError(f"point {q} outside the sampled domain") from exc

    def gradient_at(self, q, params):
        interp, q = self._interp(q)
        grad = np.zeros(q.size)
        for a, h in enumerate(self.grid.spacing):
            e = np.zeros(q.size)
            e[a] = 0.5 * h
            try:
                hi, lo = interp(np.stack([q + e, q - e]))
            except ValueError as exc:
                raise PreconditionError(f"gradient unavailable at {q}: outside sampled domain") from exc
            grad[a] = (hi - lo) / h
        return grad


Potential = Union[Free, Harmonic, Barrier, Sampled]


# --- operators --------------------------------------------------------------

def laplacian(psi: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral Laplacian on the periodic grid."""
    axes = tuple(range(grid.ndim))
    return np.fft.ifftn(-grid.q_squared * np.fft.fftn(psi, axes=axes), axes=axes)


def apply_kinetic(psi: np.ndarray, grid: Grid, params: PhysicsParams) -> np.ndarray:
    return -params.hbar ** 2 / (2 * params.mass) * laplacian(psi, grid)


def _amplitudes(psi) -> tuple:
    if isinstance(psi, Wavefunction):
        return psi.amplitudes, psi.grid
    raise TypeError("expected a Wavefunction")


def apply_hamiltonian(psi: Wavefunction, potential: Potential,
                      params: PhysicsParams) -> np.ndarray:
    """Return ``H psi`` including the friction term ``-1j*hbar*d*k/m``."""
    a, grid = _amplitudes(psi)
    grid.check_params(params)
    v = potential.values(grid, params)
    shift = -1j * params.hbar * damping_rate(params)
    return apply_kinetic(a, grid, params) + (v + shift) * a


# --- states and observables ------------------------------------------------

def norm(psi: Wavefunction) -> float:
    """Discrete norm ``dx**d * sum |psi|**2``."""
    return float(psi.grid.cell_volume * np.sum(np.abs(psi.amplitudes) ** 2))


def init_gaussian(grid: Grid, params: PhysicsParams, center=0.0, width=1.0,
                  momentum=0.0) -> Wavefunction:
    """Normalized Gaussian packet ``exp(-|x-x0|**2/(4 width**2) + 1j p0.x/hbar)``.

    ``width`` is the position standard deviation of ``|psi|**2``.
    """
    grid.check_params(params)
    dim = grid.ndim
    x0 = _as_tuple(center, dim)
    p0 = _as_tuple(momentum, dim)
    sigma = float(width)
    for a in range(dim):
        if sigma < 3 * grid.spacing[a]:
            raise PreconditionError(
                f"packet too narrow: width {sigma} < 3*dx = {3 * grid.spacing[a]}")
        if x0[a] - 5 * sigma < grid.x_min[a] or x0[a] + 5 * sigma > grid.x_max[a]:
            raise PreconditionError(
                f"packet out of domain on axis {a}: center {x0[a]} +- 5*{sigma}")
    exponent = np.zeros(grid.shape, dtype=complex)
    for x, c, p in zip(grid.mesh, x0, p0):
        exponent += -((x - c) ** 2) / (4 * sigma ** 2) + 1j * p * x / params.hbar
    psi = np.exp(exponent)
    psi /= np.sqrt(grid.cell_volume * np.sum(np.abs(psi) ** 2))
    return Wavefunction(grid, psi, 0.0)


@dataclass(frozen=True)
class ObservableRecord:
    time: float
    norm: float
    mean_position: tuple
    mean_momentum: tuple
    mean_energy_h0: float
    width: tuple = field(default=(), compare=False)

    def values(self) -> list:
        return [self.time, self.norm, *self.mean_position, *self.mean_momentum,
                self.mean_energy_h0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values())))


def observables(psi: Wavefunction, params: PhysicsParams,
                potential: Potential) -> ObservableRecord:
    """Norm and normalized expectations of position, momentum and ``H0``.

    ``H0`` is the Hermitian part of the Hamiltonian (kinetic plus ``V``).
    Momentum uses the spectral derivative, so every mode contributes
    ``hbar*q`` with ``q`` the FFT angular wavenumber.
    """
    grid = psi.grid
    grid.check_params(params)
    a = psi.amplitudes
    dv = grid.cell_volume
    density = np.abs(a) ** 2
    n = dv * float(np.sum(density))
    if n < ZERO_NORM:
        raise ZeroNormError(f"state norm {n:g} is zero; normalized observables undefined")

    mean_x = tuple(dv * float(np.sum(x * density)) / n for x in grid.mesh)
    var_x = tuple(dv * float(np.sum((x - m) ** 2 * density)) / n
                  for x, m in zip(grid.mesh, mean_x))

    axes = tuple(range(grid.ndim))
    spec = np.abs(np.fft.fftn(a, axes=axes)) ** 2
    total = float(np.sum(spec))
    mean_p = tuple(params.hbar * float(np.sum(q * spec)) / total for q in grid.wavenumbers)

    h0 = apply_kinetic(a, grid, params) + potential.values(grid, params) * a
    energy = dv * float(np.real(np.vdot(a, h0))) / n
    return ObservableRecord(psi.time, n, mean_x, mean_p, energy,
                            width=tuple(np.sqrt(v) for v in var_x))
