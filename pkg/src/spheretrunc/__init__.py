"""Gaussian integrals over centered Euclidean balls, spherical truncation of
covariance spectra, and reconstruction of the full spectrum by fixed-point
iteration, plus the Monte Carlo machinery to study the schemes' convergence
rates on Wishart ensembles."""

__version__ = "0.1.0"

from .ensembles import (
    REFERENCE_MODES,
    ModeTable,
    RngStream,
    WishartConfig,
    bartlett_sample,
    grenander_mode,
    mode_table,
    rho_grid,
    sample_spectrum,
)
from .linalg import EigDecomp, compose, eigh, inf_norm
from .reconstruction import (
    JacobianInfo,
    SolverConfig,
    SolverTrace,
    fixed_point_map,
    jacobian,
    omega_opt,
    relaxation_factor,
    solve,
)
from .ruben import (
    BallIntegrals,
    RubenEvaluator,
    RubenSeries,
    choose_scale,
    eval_integrals,
    k_threshold,
)
from .truncation import (
    FeasibilityReport,
    TruncatedSpectrum,
    check_feasibility,
    mu_bounds,
    truncate_matrix,
    truncate_spectrum,
)

__all__ = [
    "__version__",
    "REFERENCE_MODES",
    "ModeTable",
    "RngStream",
    "WishartConfig",
    "bartlett_sample",
    "grenander_mode",
    "mode_table",
    "rho_grid",
    "sample_spectrum",
    "EigDecomp",
    "compose",
    "eigh",
    "inf_norm",
    "JacobianInfo",
    "SolverConfig",
    "SolverTrace",
    "fixed_point_map",
    "jacobian",
    "omega_opt",
    "relaxation_factor",
    "solve",
    "BallIntegrals",
    "RubenEvaluator",
    "RubenSeries",
    "choose_scale",
    "eval_integrals",
    "k_threshold",
    "FeasibilityReport",
    "TruncatedSpectrum",
    "check_feasibility",
    "mu_bounds",
    "truncate_matrix",
    "truncate_spectrum",
]
