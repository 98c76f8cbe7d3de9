"""nldisp: principal spectrum points of nonlocal dispersal operators.

Discretizes nonlocal dispersal operators under Dirichlet-type, Neumann-type,
and periodic boundary conditions, computes their principal spectrum points by
several independent routes, tests principal-eigenvalue existence, and
simulates the two-species competition system built on the same operators.
"""

from ._accel import USING_NUMBA
from .grid import BoundaryCondition, BoxDomain, GridDiscretization, build_grid, min_image_displacement
from .kernels import (
    CoefficientField,
    KernelSpec,
    PeriodicKernel,
    coefficient_stats,
    eval_kernel,
    mollify_flatten,
    periodize_kernel,
    random_fourier_field,
)
from .operators import (
    OperatorKind,
    OperatorMatrix,
    assemble_averaged,
    assemble_dispersal,
    assemble_U,
    assemble_V,
    h_field,
    kernel_mass,
)
from .spectral import (
    ExistenceVerdict,
    Route,
    SpectralReport,
    bar_lambda3,
    existence_test,
    principal_point_eig,
    principal_point_growth,
    principal_point_rayleigh,
    radius_positive,
    solve_r_equals_one,
)
from .evolution import (
    EvolutionState,
    Trajectory,
    check_coefficient_comparison,
    check_comparison,
    evolve_linear,
    expm_reference,
)
from .competition import (
    CompetitionProblem,
    CompetitionTrajectory,
    GrowthModel,
    exclusion_experiment,
    rhs_competition,
    simulate_competition,
    steady_state_single,
    verify_exclusion,
)
from .errors import ConfigError, NldispError, NumericsError

__version__ = "0.1.0"

__all__ = [
    "USING_NUMBA",
    "BoundaryCondition",
    "BoxDomain",
    "GridDiscretization",
    "build_grid",
    "min_image_displacement",
    "CoefficientField",
    "KernelSpec",
    "PeriodicKernel",
    "coefficient_stats",
    "eval_kernel",
    "mollify_flatten",
    "periodize_kernel",
    "random_fourier_field",
    "OperatorKind",
    "OperatorMatrix",
    "assemble_averaged",
    "assemble_dispersal",
    "assemble_U",
    "assemble_V",
    "h_field",
    "kernel_mass",
    "ExistenceVerdict",
    "Route",
    "SpectralReport",
    "bar_lambda3",
    "existence_test",
    "principal_point_eig",
    "principal_point_growth",
    "principal_point_rayleigh",
    "radius_positive",
    "solve_r_equals_one",
    "EvolutionState",
    "Trajectory",
    "check_coefficient_comparison",
    "check_comparison",
    "evolve_linear",
    "expm_reference",
    "CompetitionProblem",
    "CompetitionTrajectory",
    "GrowthModel",
    "exclusion_experiment",
    "rhs_competition",
    "simulate_competition",
    "steady_state_single",
    "verify_exclusion",
    "ConfigError",
    "NldispError",
    "NumericsError",
]
