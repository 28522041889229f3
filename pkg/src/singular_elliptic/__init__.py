"""Variational solver for singular semilinear elliptic problems.

Computes the positive energy-minimizing solution of

    -Lap(u) = a(x) u^(-gamma) + lambda f(u),  u > 0,  u = 0 on the boundary,

on interval/rectangle grids for lambda below the critical value
lambda_star = delta1 / theta, traces the solution branch in lambda, and
cross-checks the structural identities of the energy along the way.
"""

from .energy import (
    EnergyContext,
    energy_value,
    h_lambda,
    j_lambda,
    make_context,
    nehari_residual,
    phi1_upper_bound,
    regularized_energy,
    residual_reg,
    t_star,
)
from .grid import (
    DiscreteOperators,
    Domain,
    Grid,
    GridFunction,
    GridMismatchError,
    Interval,
    Rectangle,
    assemble_operators,
    boundary_distance,
    build_grid,
    h1_norm,
    integrate,
)
from .model import (
    AffineSublinear,
    ConstantWeight,
    Custom,
    DistPowWeight,
    Linear,
    NodalWeight,
    SingularExponent,
    big_f_eval,
    check_f_conditions,
    f_eval,
    g_value,
    weight_admissible,
)
from .oracle import OracleConfig, brute_force_minimize, scalar_psi_min
from .solver import (
    Diagnostics,
    SolveOutcome,
    SolverPolicy,
    check_solution,
    solve_at,
)
from .spectral import Eigenpair, lambda_star, principal_eigenpair
from .sweep import (
    DerivativeCheck,
    SweepPlan,
    SweepRecord,
    default_plan,
    didlambda_check,
    emit_csv,
    read_csv,
    run_sweep,
)

__all__ = [
    "AffineSublinear",
    "ConstantWeight",
    "Custom",
    "Diagnostics",
    "DerivativeCheck",
    "DiscreteOperators",
    "DistPowWeight",
    "Domain",
    "Eigenpair",
    "EnergyContext",
    "Grid",
    "GridFunction",
    "GridMismatchError",
    "Interval",
    "Linear",
    "NodalWeight",
    "OracleConfig",
    "Rectangle",
    "SingularExponent",
    "SolveOutcome",
    "SolverPolicy",
    "SweepPlan",
    "SweepRecord",
    "assemble_operators",
    "big_f_eval",
    "boundary_distance",
    "brute_force_minimize",
    "build_grid",
    "check_f_conditions",
    "check_solution",
    "default_plan",
    "didlambda_check",
    "emit_csv",
    "energy_value",
    "f_eval",
    "g_value",
    "h1_norm",
    "h_lambda",
    "integrate",
    "j_lambda",
    "lambda_star",
    "make_context",
    "nehari_residual",
    "phi1_upper_bound",
    "principal_eigenpair",
    "read_csv",
    "regularized_energy",
    "residual_reg",
    "run_sweep",
    "scalar_psi_min",
    "solve_at",
    "t_star",
    "weight_admissible",
]

__version__ = "0.1.0"
