"""Sticky-particle solutions of the 1D pressureless Euler system with interaction.

The public surface re-exports the main building blocks; see the submodules
for the full API.
"""

from .diagnostics import (
    BumpTestFunction,
    CheckRecord,
    DiagnosticsReport,
    check_energy_monotone,
    check_flow_equation,
    check_kinetic_bound,
    check_oleinik,
    check_qspp,
    check_stability,
    energy,
    flow_equation_residual,
    run_checks,
    theta,
    wasserstein2,
    weak_form_residual,
)
from .dynamics import SimState, SolverOptions, locate_collision, merge, simulate
from .errors import (
    ArgumentError,
    DomainError,
    IntegrationError,
    PeflowError,
    TruncationError,
    ValidationError,
)
from .euler_poisson import ABS, check_subdiff, epsilon_continuation, simulate_ep
from .initial_data import (
    DiscreteMeasure,
    Gaussian,
    InitialVelocity,
    TabulatedCDF,
    Uniform,
    quantize,
    v0_total_variation,
)
from .kernels import BACKEND
from .potential import Potential, semiconvexity_constant
from .trajectory import MonotoneMap, TrajectoryMap

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
