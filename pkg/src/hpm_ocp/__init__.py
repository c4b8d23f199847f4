"""Suboptimal control of polynomial systems by homotopy perturbation of the
Pontryagin boundary value problem."""

from .errors import (
    AccuracyError,
    BoundarySystemSingularError,
    DimensionError,
    DivergenceError,
    HpmOcpError,
    ProblemValidationError,
    SequencingError,
    SingularMatrixError,
    ValidationError,
)
from .hpm import (
    HpmConfig,
    HpmSolution,
    HpmSolveError,
    control_from_costate,
    evaluate_cost,
    solve_hpm,
    solve_order_n,
    solve_order_zero,
)
from .numerics import Grid, Trajectory
from .oracle import analytic_scalar_lq, shooting_solve, simulate_nonlinear
from .presets import spacecraft_problem
from .problem import Monomial, OcpProblem, PolyVectorField, validate
from .series import SeriesTerm, he_forcing
from .tpbvp import build_hamiltonian, residual_norm, solve_linear_tpbvp

__all__ = [
    "AccuracyError",
    "analytic_scalar_lq",
    "BoundarySystemSingularError",
    "build_hamiltonian",
    "control_from_costate",
    "DimensionError",
    "DivergenceError",
    "evaluate_cost",
    "Grid",
    "he_forcing",
    "HpmConfig",
    "HpmOcpError",
    "HpmSolution",
    "HpmSolveError",
    "Monomial",
    "OcpProblem",
    "PolyVectorField",
    "ProblemValidationError",
    "residual_norm",
    "SequencingError",
    "SeriesTerm",
    "shooting_solve",
    "simulate_nonlinear",
    "SingularMatrixError",
    "solve_hpm",
    "solve_linear_tpbvp",
    "solve_order_n",
    "solve_order_zero",
    "spacecraft_problem",
    "Trajectory",
    "validate",
    "ValidationError",
]

__version__ = "0.1.0"
