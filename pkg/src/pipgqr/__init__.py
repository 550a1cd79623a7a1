"""PIPG first-order conic solver with QR equality-constraint
preconditioning, adaptive step sizes, and MPC benchmark problems."""

from .precond import PreconditionedProblem, qr_precondition, verify_orthogonality
from .problem import (
    CanonicalProblem,
    SpectralData,
    error_metrics,
    kkt_condition_bound,
    kkt_residual,
    lagrangian,
    load_problem,
    optimal_singular_value,
    save_problem,
    spectral_estimates,
)
from .solver import (
    DivergenceError,
    SolverConfig,
    SolverResult,
    StepSizes,
    pipg_run,
    step_selection,
    steps_from_gamma,
)

__all__ = [
    "CanonicalProblem",
    "DivergenceError",
    "PreconditionedProblem",
    "SolverConfig",
    "SolverResult",
    "SpectralData",
    "StepSizes",
    "error_metrics",
    "kkt_condition_bound",
    "kkt_residual",
    "lagrangian",
    "load_problem",
    "optimal_singular_value",
    "pipg_run",
    "qr_precondition",
    "save_problem",
    "spectral_estimates",
    "step_selection",
    "steps_from_gamma",
    "verify_orthogonality",
]

__version__ = "0.1.0"
