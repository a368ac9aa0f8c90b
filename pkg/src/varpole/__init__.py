"""Pole order, Laurent coefficients and cointegration projectors of A^{-1}(z) at z = 1."""
from .coint import CointegrationResult, coint_rank, compute_P, compute_pi
from .laurent import (
    ContourError,
    ConvergenceError,
    LaurentExpansion,
    ReconstructionError,
    annihilation_check,
    contour_coefficients,
    oracle_pole_order,
    toeplitz_reconstruct,
    verify_fundamental_identities,
)
from .matpoly import MatrixPolynomial, det_roots, evaluate, from_var
from .numla import DEFAULT_TOL, Tolerances
from .parsum import bordered_parallel_sum, parallel_sum
from .polecore import (
    NoPoleError,
    PoleReport,
    UnsupportedOrderError,
    decomposition_check,
    detect_pole_order,
    leading_matrix,
)
from .simkit import (
    SmithSpec,
    generate_smith_model,
    grid_specs,
    integration_diagnostics,
    simulate_var,
    simulate_var_batch,
)

__all__ = [
    "CointegrationResult", "coint_rank", "compute_P", "compute_pi",
    "ContourError", "ConvergenceError", "LaurentExpansion", "ReconstructionError",
    "annihilation_check", "contour_coefficients", "oracle_pole_order",
    "toeplitz_reconstruct", "verify_fundamental_identities",
    "MatrixPolynomial", "det_roots", "evaluate", "from_var",
    "DEFAULT_TOL", "Tolerances",
    "bordered_parallel_sum", "parallel_sum",
    "NoPoleError", "PoleReport", "UnsupportedOrderError", "decomposition_check",
    "detect_pole_order", "leading_matrix",
    "SmithSpec", "generate_smith_model", "grid_specs", "integration_diagnostics",
    "simulate_var", "simulate_var_batch",
]

__version__ = "0.1.0"
