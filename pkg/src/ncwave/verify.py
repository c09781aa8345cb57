"""Moment-integral and generator-defect checks behind ``ncwave verify``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .core import Free, Grid, Harmonic, PhysicsParams, Wavefunction, init_gaussian, norm
from .pathintegral import (check_step_guard, fourth_moment_contribution,
                           generator_defect, kernel_moment_closed,
                           kernel_moment_quadrature, richardson_limit,
                           step_short_time)

DEFAULT_EPS = (1e-1, 1e-2, 1e-3)
DEFAULT_DELTA = 1e-2
DEFECT_EPS = (1e-2, 5e-3, 2.5e-3)

MOMENT_RTOL = 1e-8
ODD_ATOL = 1e-10
LIMIT_RTOL = 1e-4
DEFECT_RATIO = (1.7, 2.3)
DEFECT_MAX = 1e-2
KERNEL_LINEAR_RTOL = 0.01
FOURTH_RATIO = (90.0, 110.0)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: str
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44s} {self.value:12.4e}  {self.bound}"


def moment_checks(eps_list: Sequence[float], delta: float, params: PhysicsParams,
                  fourth_moment_factor: float = 3.0) -> List[Check]:
    out = []
    for eps in eps_list:
        check_step_guard(eps, params)
        epsc = eps * (1 - 1j * delta)
        for order in (0, 1, 2, 4):
            quad = kernel_moment_quadrature(order, eps, params, delta)
            closed = kernel_moment_closed(order, epsc, params, fourth_moment_factor)
            if order == 1:
                err = abs(quad)
                out.append(Check(f"moment {order} eps={eps:g} |quad|", err,
                                 f"<= {ODD_ATOL:g}", err <= ODD_ATOL))
            else:
                err = abs(quad - closed) / abs(closed)
                out.append(Check(f"moment {order} eps={eps:g} quad vs closed", err,
                                 f"<= {MOMENT_RTOL:g}", err <= MOMENT_RTOL))
        for order in (0, 2, 4):
            vals = [kernel_moment_quadrature(order, eps, params, delta / 2 ** j)
                    for j in range(3)]
            limit = richardson_limit(vals)
            closed = kernel_moment_closed(order, eps, params, fourth_moment_factor)
            err = abs(limit - closed) / abs(closed)
            out.append(Check(f"moment {order} eps={eps:g} delta->0 limit", err,
                             f"<= {LIMIT_RTOL:g}", err <= LIMIT_RTOL))
    return out


def reference_gaussian(params: PhysicsParams) -> Wavefunction:
    grid = Grid(-20.0, 20.0, 512)
    return init_gaussian(grid, params.replace(dim=1), center=0.0, width=2.0)


def defect_checks(params: PhysicsParams) -> List[Check]:
    p1 = params.replace(dim=1)
    psi = reference_gaussian(p1)
    pot = Harmonic(1.0)
    out = []
    defects = [generator_defect(psi, pot, p1, e) for e in DEFECT_EPS + (DEFECT_EPS[-1] / 2,)]
    for e, d0, d1 in zip(DEFECT_EPS, defects, defects[1:]):
        r = d0 / d1
        out.append(Check(f"defect ratio eps={e:g}", r, f"in {list(DEFECT_RATIO)}",
                         DEFECT_RATIO[0] <= r <= DEFECT_RATIO[1]))
    d = generator_defect(psi, pot, p1, 1e-3)
    out.append(Check("defect eps=0.001", d, f"<= {DEFECT_MAX:g}", d <= DEFECT_MAX))
    return out


def kernel_norm_checks(params: PhysicsParams, eps: float = 1e-3) -> List[Check]:
    p3 = params.replace(dim=3)
    grid = Grid(-1.0, 1.0, (8, 8, 8))
    psi = Wavefunction(grid, np.ones(grid.shape))
    out_psi = step_short_time(psi, Free(), p3, eps)
    factor = complex(out_psi.amplitudes.ravel()[0])
    m, k = p3.mass, p3.friction_k
    expected = (m / (m + 2 * k * eps)) ** 1.5
    spread = float(np.max(np.abs(out_psi.amplitudes - factor)))
    err = abs(factor - expected) / expected + spread
    checks = [Check("kernel scaling on constant state (d=3)", err, "<= 1e-12", err <= 1e-12)]
    if k > 0:
        linear = (factor.real - 1) / eps
        target = -3 * k / m
        rel = abs(linear - target) / abs(target)
        checks.append(Check("kernel eps-linear term vs -3k/m", rel,
                            f"<= {KERNEL_LINEAR_RTOL:g}", rel <= KERNEL_LINEAR_RTOL))
    ratio = norm(out_psi) / norm(psi)
    checks.append(Check("kernel norm ratio (m/(m+2k eps))^3", abs(ratio - expected ** 2),
                        "<= 1e-12", abs(ratio - expected ** 2) <= 1e-12))
    return checks


def fourth_moment_checks(params: PhysicsParams) -> List[Check]:
    p1 = params.replace(dim=1)
    psi = reference_gaussian(p1)
    sizes = [np.linalg.norm(fourth_moment_contribution(psi, p1, e)) for e in (1e-2, 1e-3)]
    if sizes[1] == 0:
        return [Check("dropped fourth-moment term ratio", 0.0, "k > 0 required", True)]
    r = sizes[0] / sizes[1]
    return [Check("dropped fourth-moment term eps^2 ratio", r, f"in {list(FOURTH_RATIO)}",
                  FOURTH_RATIO[0] <= r <= FOURTH_RATIO[1])]


def run_all(eps_list=DEFAULT_EPS, delta=DEFAULT_DELTA, params: PhysicsParams = None,
            fourth_moment_factor: float = 3.0) -> List[Check]:
    if params is None:
        params = PhysicsParams(friction_k=0.05)
    checks = moment_checks(eps_list, delta, params, fourth_moment_factor)
    checks += kernel_norm_checks(params)
    checks += defect_checks(params)
    checks += fourth_moment_checks(params)
    return checks
