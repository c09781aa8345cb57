"""Wave-packet dynamics for a particle subject to velocity-proportional friction.

The wave equation is the Schrodinger equation with the constant
anti-Hermitian term ``-1j*hbar*d*k/m`` added to the Hamiltonian.
"""
from .core import (Barrier, Free, Grid, Harmonic, NcwaveError, NumericalFailure,
                   ObservableRecord, PhysicsParams, PreconditionError, Sampled,
                   Wavefunction, ZeroNormError, apply_hamiltonian, init_gaussian,
                   observables)
from .solver import (EvolutionPlan, Integrator, evolve, step_crank_nicolson,
                     step_exact_factored, step_split_fourier)
from .pathintegral import (generator_defect, kernel_moment_closed,
                           kernel_moment_quadrature, step_short_time)
from .classical import ClassicalState, compare_ehrenfest, integrate, lagrangian_general

__version__ = "0.1.0"
