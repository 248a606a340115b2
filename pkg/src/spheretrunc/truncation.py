"""Forward spherical truncation of covariance spectra and matrices.

Restricting N(0, Sigma) to the centered ball of square radius rho leaves
the eigenvectors of Sigma untouched and damps each eigenvalue lam_k to
mu_k = lam_k * alpha_k / alpha. This module applies that map and checks
the feasibility region H_v(rho) every truncated spectrum must lie in:

    sum_k mu_k <= rho,   sorted mu_(k) <= min(rho/3, rho/(v-k+1)).

A mu outside H_v(rho) cannot arise from any full covariance matrix, which
is the library's no-go test for reconstruction inputs.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .ruben import RubenEvaluator
from .specfun import bound_ratio_r

# absolute slack when checking analytic bounds; absorbs the certified
# series error of the integrals that produced mu
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class TruncatedSpectrum:
    """Eigenvalues of the truncated second-moment matrix at ball radius^2 rho."""

    mu: np.ndarray
    rho: float


@dataclass(frozen=True)
class FeasibilityReport:
    in_H: bool
    violated: list = field(default_factory=list)


def _as_sorted_spectrum(lam):
    arr = np.asarray(lam, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("spectrum must be a nonempty 1-d array")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("spectrum must be finite and strictly positive")
    if np.any(np.diff(arr) < 0.0):
        raise ValueError("spectrum must be in ascending order")
    return arr


def truncate_spectrum(lam, rho: float, epsilon: float = 1e-14) -> TruncatedSpectrum:
    """Apply the truncation map mu_k = lam_k alpha_k / alpha.

    Requires an ascending spectrum; the output is then ascending as well.
    """
    arr = _as_sorted_spectrum(lam)
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    ints = RubenEvaluator(arr, epsilon).integrals(rho, want="alpha_and_k")
    mu = arr * ints.alpha_k / ints.alpha
    return TruncatedSpectrum(mu=mu, rho=float(rho))


def truncate_matrix(sigma, rho: float, epsilon: float = 1e-14) -> np.ndarray:
    """Truncated second-moment matrix of N(0, sigma) on the ball.

    Shares the eigenvectors of sigma: only the spectrum is damped.
    """
    dec = linalg.eigh(sigma)
    if dec.eigenvalues[0] <= 0.0:
        raise ValueError("truncate_matrix requires a positive definite matrix")
    mu = truncate_spectrum(dec.eigenvalues, rho, epsilon).mu
    return linalg.compose(mu, dec.eigenvectors)


def feasibility_limits(v: int, rho: float) -> np.ndarray:
    """Per-position upper limits for an ascending mu: min(rho/3, rho/(v-k+1))."""
    k = np.arange(1, v + 1)
    return np.minimum(rho / 3.0, rho / (v - k + 1))


def check_feasibility(mu, rho: float) -> FeasibilityReport:
    """Membership test for H_v(rho) with identifiers of violated bounds."""
    arr = np.asarray(mu, dtype=float)
    if arr.ndim != 1 or arr.size < 1 or np.any(arr <= 0.0):
        raise ValueError("mu must be a 1-d array of positive values")
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    v = arr.size
    violated = []
    if arr.sum() > rho + BOUND_SLACK:
        violated.append("sum")
    ordered = np.sort(arr)
    if np.any(ordered > rho / 3.0 + BOUND_SLACK):
        violated.append("rho/3")
    if np.any(ordered > rho / (v - np.arange(1, v + 1) + 1) + BOUND_SLACK):
        violated.append("per-index")
    return FeasibilityReport(in_H=not violated, violated=violated)


def mu_bounds(lam, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Analytic per-index (lower, upper) bounds on the truncated eigenvalues.

    lower_k = rho / r(v, rho/(2 lam_k)); upper_k folds the rho/3 cap with the
    ordered bound rho/(v-k+1), which is sharper only for v > 3 and small k.
    """
    arr = _as_sorted_spectrum(lam)
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    v = arr.size
    lower = np.array([rho / bound_ratio_r(v, rho / (2.0 * lk)) for lk in arr])
    return lower, feasibility_limits(v, rho)
