"""Short-time propagator for friction ``F = -k v`` and its Gaussian moments.

One short step of length ``eps`` convolves the state with the kernel

    K(eta) = A**-d * exp(1j * alpha * |eta|**2),
    alpha = (m + 2 k eps) / (2 hbar eps),   A = sqrt(2j pi hbar eps / m),

and then multiplies by ``exp(-1j eps V / hbar)``.  The friction work along
the straight segment adds ``k |eta|**2 / hbar`` to the free-particle phase.
On a periodic grid the convolution is diagonal in Fourier space with
multiplier

    M(q) = (m / (m + 2 k eps))**(d/2) * exp(-1j hbar eps |q|**2 / (2 (m + 2 k eps)))

which follows from the Fresnel integral of a chirp.  The kernel never
decays for real ``eps``; real-space checks therefore use ``eps (1 - 1j delta)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (Grid, PhysicsParams, Potential, PreconditionError, NcwaveError,
                   Wavefunction, damping_rate, laplacian)

__all__ = [
    "QuadratureError", "ShortTimeParams", "normalization_constant",
    "kernel_moment_closed", "kernel_moment_quadrature", "richardson_limit",
    "short_time_multiplier", "step_short_time", "short_time_kernel",
    "convolve_direct", "generator_rhs", "generator_defect",
    "fourth_moment_contribution", "check_step_guard",
]

EXPANSION_GUARD = 0.1
QUAD_RTOL = 1e-8
QUAD_WINDOW = 12.0


class QuadratureError(NcwaveError, ArithmeticError):
    """Successive refinements of an oscillatory quadrature did not agree."""


def check_step_guard(eps, params: PhysicsParams) -> None:
    if not np.real(eps) > 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    ratio = params.friction_k * abs(eps) / params.mass
    if ratio > EXPANSION_GUARD:
        raise PreconditionError(
            f"k*eps/m = {ratio:g} exceeds {EXPANSION_GUARD}: the first-order "
            "expansion of the friction phase is not valid")


@dataclass(frozen=True)
class ShortTimeParams:
    epsilon: float
    delta_reg: float
    physics: PhysicsParams

    def __post_init__(self):
        if not 0 < self.delta_reg <= 0.1:
            raise PreconditionError(f"delta_reg must lie in (0, 0.1], got {self.delta_reg}")
        check_step_guard(self.epsilon, self.physics)

    @property
    def regularized_epsilon(self) -> complex:
        return self.epsilon * (1 - 1j * self.delta_reg)


def normalization_constant(eps, params: PhysicsParams) -> complex:
    """``A = (2j pi hbar eps / m)**(1/2)``, principal branch; ``eps`` may be complex."""
    return np.sqrt(2j * np.pi * params.hbar * complex(eps) / params.mass)


def kernel_moment_closed(order: int, eps, params: PhysicsParams,
                         fourth_moment_factor: float = 3.0) -> complex:
    """Closed form of ``int eta**order exp(1j m eta**2 / (2 hbar eps)) d eta``.

    Orders 0, 1, 2 and 4 are supported.  ``eps`` may carry a small negative
    imaginary part, in which case the integral converges absolutely and the
    formula is its analytic continuation.  ``fourth_moment_factor`` exists so
    the verification command can be fed a deliberately wrong constant.
    """
    a = normalization_constant(eps, params)
    s = 1j * params.hbar * complex(eps) / params.mass
    if order == 0:
        return a
    if order == 1:
        return 0j
    if order == 2:
        return s * a
    if order == 4:
        return fourth_moment_factor * s ** 2 * a
    raise PreconditionError(f"unsupported moment order {order}; expected 0, 1, 2 or 4")


def kernel_moment_quadrature(order: int, eps: float, params: PhysicsParams,
                             delta: float, min_nodes: int = 1 << 14,
                             max_nodes: int = 1 << 23) -> complex:
    """Trapezoid-rule value of the same moment with ``eps -> eps (1 - 1j delta)``.

    The window ``|eta| <= 12 sqrt(2 hbar eps / m) / sqrt(delta)`` puts the
    Gaussian envelope below ``exp(-144)`` at the ends.  Node count is doubled
    until two successive values agree to ``1e-8`` relative.
    """
    if order not in (0, 1, 2, 4):
        raise PreconditionError(f"unsupported moment order {order}; expected 0, 1, 2 or 4")
    if not 0 < delta <= 0.1:
        raise PreconditionError(f"delta must lie in (0, 0.1], got {delta}")
    if not eps > 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    epsc = eps * (1 - 1j * delta)
    coeff = 1j * params.mass / (2 * params.hbar * epsc)
    half_width = QUAD_WINDOW * np.sqrt(2 * params.hbar * eps / params.mass) / np.sqrt(delta)

    def trapezoid(n_half):
        h = half_width / n_half
        eta = h * np.arange(-n_half, n_half + 1)
        f = eta ** order * np.exp(coeff * eta ** 2)
        # end weights are irrelevant at exp(-144); the plain sum is the trapezoid rule
        return h * np.sum(f), h * np.sum(np.abs(f))

    n_half = min_nodes // 2
    prev, _ = trapezoid(n_half)
    while 2 * n_half <= max_nodes:
        n_half *= 2
        cur, mag = trapezoid(n_half)
        # odd orders vanish, so measure against the integral of |f| instead
        scale = mag if order == 1 else abs(cur)
        if abs(cur - prev) <= QUAD_RTOL * scale:
            return cur
        prev = cur
    raise QuadratureError(
        f"moment {order} at eps={eps:g}, delta={delta:g} did not converge "
        f"with {2 * n_half + 1} nodes")


def richardson_limit(values, ratio: float = 2.0, order: int = 1) -> complex:
    """Extrapolate ``values`` taken at ``h, h/ratio, h/ratio**2, ...`` to ``h -> 0``.

    Assumes an error expansion in integer powers ``h**order, h**(order+1), ...``.
    """
    table = [complex(v) for v in values]
    p = order
    while len(table) > 1:
        f = ratio ** p
        table = [(f * table[i + 1] - table[i]) / (f - 1) for i in range(len(table) - 1)]
        p += 1
    return table[0]


# --- propagation step --------------------------------------------------------

def short_time_multiplier(grid: Grid, eps, params: PhysicsParams) -> np.ndarray:
    """Fourier multiplier of the friction kernel; ``eps`` may be complex."""
    m, k = params.mass, params.friction_k
    stiff = m + 2 * k * eps
    amp = (m / stiff) ** (params.dim / 2)
    return amp * np.exp(-1j * params.hbar * eps * grid.q_squared / (2 * stiff))


def step_short_time(psi: Wavefunction, potential: Potential, params: PhysicsParams,
                    eps: float) -> Wavefunction:
    """One short-time path-integral step of length ``eps``.

    The potential is applied once, at the endpoint, after the kernel
    convolution; the midpoint form differs at second order in ``eps``.
    """
    check_step_guard(eps, params)
    grid = psi.grid
    grid.check_params(params)
    axes = tuple(range(grid.ndim))
    mult = short_time_multiplier(grid, eps, params)
    conv = np.fft.ifftn(mult * np.fft.fftn(psi.amplitudes, axes=axes), axes=axes)
    phase = np.exp(-1j * eps * potential.values(grid, params) / params.hbar)
    return psi.evolved(phase * conv, eps)


def short_time_kernel(eta_sq, eps, params: PhysicsParams) -> np.ndarray:
    """Real-space kernel ``A**-d exp(1j alpha |eta|**2)`` for complex or real ``eps``."""
    alpha = (params.mass + 2 * params.friction_k * eps) / (2 * params.hbar * eps)
    a = normalization_constant(eps, params)
    return np.exp(1j * alpha * np.asarray(eta_sq)) / a ** params.dim


def convolve_direct(func, x, eps, params: PhysicsParams, delta: float,
                    n_nodes: int = 1 << 15) -> np.ndarray:
    """Apply the regularized 1-D kernel to a function by real-space quadrature.

    ``func`` is evaluated at ``x + eta`` on a trapezoid grid in ``eta``; this
    is the small-grid oracle for the spectral multiplier.
    """
    if params.dim != 1:
        raise PreconditionError("direct convolution oracle is 1-D")
    epsc = eps * (1 - 1j * delta)
    half_width = QUAD_WINDOW * np.sqrt(2 * params.hbar * eps / params.mass) / np.sqrt(delta)
    h = half_width / n_nodes
    eta = h * np.arange(-n_nodes, n_nodes + 1)
    kern = short_time_kernel(eta ** 2, epsc, params)
    x = np.asarray(x, dtype=float)
    return np.array([h * np.sum(kern * func(xi + eta)) for xi in x])


# --- generator defect --------------------------------------------------------

def generator_rhs(psi: Wavefunction, potential: Potential, params: PhysicsParams) -> np.ndarray:
    """``dpsi/dt = -(1j/hbar) V psi + (1j hbar/2m) lap psi - (d k/m) psi``."""
    grid = psi.grid
    a = psi.amplitudes
    v = potential.values(grid, params)
    return (-1j / params.hbar * v * a
            + 1j * params.hbar / (2 * params.mass) * laplacian(a, grid)
            - damping_rate(params) * a)


def generator_defect(psi: Wavefunction, potential: Potential, params: PhysicsParams,
                     eps: float) -> float:
    """Relative L2 mismatch between the one-step difference quotient and the
    wave-equation right-hand side.  Tends to zero linearly in ``eps``."""
    rhs = generator_rhs(psi, potential, params)
    step = step_short_time(psi, potential, params, eps).amplitudes
    quotient = (step - psi.amplitudes) / eps
    return float(np.linalg.norm(quotient - rhs) / np.linalg.norm(rhs))


def fourth_moment_contribution(psi: Wavefunction, params: PhysicsParams,
                               eps: float) -> np.ndarray:
    """Term dropped from the expansion: ``(1j k/2hbar) sum_a B_a d2psi/dx_a**2``.

    ``B_a`` is the normalized moment of ``|eta|**2 eta_a**2``, i.e. the fourth
    moment along axis ``a`` plus products of second moments with the other
    axes.  Built from the closed-form moments, so it scales as ``eps**2``.
    """
    grid = psi.grid
    a0 = kernel_moment_closed(0, eps, params)
    m2 = kernel_moment_closed(2, eps, params) / a0
    m4 = kernel_moment_closed(4, eps, params) / a0
    bracket = m4 + (grid.ndim - 1) * m2 ** 2
    axes = tuple(range(grid.ndim))
    spec = np.fft.fftn(psi.amplitudes, axes=axes)
    second = sum(np.fft.ifftn(-(q ** 2) * spec, axes=axes) for q in grid.wavenumbers)
    return 1j * params.friction_k / (2 * params.hbar) * bracket * second
