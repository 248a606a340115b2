"""Independent verification engines for the test and acceptance suites.

Nothing here shares code with the series evaluator beyond the scalar
chi-square CDF, so agreement between the two is evidence rather than
tautology: rejection-sampling Monte Carlo, brute-force quadrature in
spherical coordinates (v <= 3), the closed isotropic (Tallis) form and its
bisection inverse, and direct Taylor-coefficient extraction from the
closed-form generating functions.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import RngStream
from .specfun import chi_square_cdf


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_samples: int
    n_accepted: int


def _generator(rng):
    return rng.generator() if isinstance(rng, RngStream) else rng


_MC_BLOCK = 1 << 20


def mc_truncated_moments(lam, rho: float, n: int, rng) -> tuple[McEstimate, list[McEstimate]]:
    """Monte Carlo estimates of the ball probability and truncated second
    moments of N(0, diag(lam)) by plain rejection counting.

    Sampling is blocked so large n stays memory-bounded.
    """
    gen = _generator(rng)
    arr = np.asarray(lam, dtype=float)
    scale = np.sqrt(arr)
    n_acc = 0
    acc_sum = np.zeros(arr.size)
    acc_sumsq = np.zeros(arr.size)
    remaining = n
    while remaining > 0:
        block = min(remaining, _MC_BLOCK)
        remaining -= block
        x = gen.standard_normal((block, arr.size)) * scale
        sq = x * x
        inside = sq.sum(axis=1) < rho
        n_acc += int(inside.sum())
        acc_sum += sq[inside].sum(axis=0)
        acc_sumsq += (sq[inside] ** 2).sum(axis=0)
    if n_acc < 2:
        raise ValueError("degenerate estimate: (almost) no samples inside the ball")
    frac = n_acc / n
    alpha = McEstimate(
        value=frac,
        std_error=math.sqrt(frac * (1.0 - frac) / n),
        n_samples=n,
        n_accepted=n_acc,
    )
    means = acc_sum / n_acc
    variances = (acc_sumsq - n_acc * means**2) / (n_acc - 1)
    errs = np.sqrt(np.maximum(variances, 0.0) / n_acc)
    mu = [McEstimate(value=float(m), std_error=float(e), n_samples=n, n_accepted=n_acc)
          for m, e in zip(means, errs)]
    return alpha, mu


def quadrature_alpha(lam, rho: float, nodes: int = 200) -> float:
    """Ball probability by tensor Gauss-Legendre in spherical coordinates.

    Only low dimensions (v <= 3); intended as a slow cross-check of the
    series evaluator to ~1e-8 absolute.
    """
    arr = np.asarray(lam, dtype=float)
    v = arr.size
    xr, wr = np.polynomial.legendre.leggauss(nodes)
    sqrho = math.sqrt(rho)
    r = 0.5 * sqrho * (xr + 1.0)  # radial nodes on [0, sqrt(rho)]
    wr = wr * 0.5 * sqrho
    norm = (2.0 * math.pi) ** (-0.5 * v) / math.sqrt(np.prod(arr))
    if v == 1:
        # even integrand: 2 * int_0^sqrt(rho)
        return float(2.0 * norm * (wr * np.exp(-0.5 * r**2 / arr[0])).sum())
    xa, wa = np.polynomial.legendre.leggauss(nodes)
    theta = math.pi * (xa + 1.0)  # [0, 2 pi]
    wt = wa * math.pi
    if v == 2:
        q = np.cos(theta) ** 2 / arr[0] + np.sin(theta) ** 2 / arr[1]
        inner = np.exp(-0.5 * np.outer(r**2, q)) @ wt
        return float(norm * (wr * r * inner).sum())
    if v == 3:
        c = xa  # cos(polar angle) on [-1, 1], weight wa
        sin_pol = np.sqrt(1.0 - c**2)
        q = (np.outer(sin_pol, np.cos(theta)) ** 2 / arr[0]
             + np.outer(sin_pol, np.sin(theta)) ** 2 / arr[1]
             + (c**2)[:, None] / arr[2])
        total = 0.0
        for ri, wi in zip(r, wr):
            total += wi * ri**2 * float(wa @ np.exp(-0.5 * ri**2 * q) @ wt)
        return float(norm * total)
    raise ValueError(f"quadrature_alpha supports v in {{1, 2, 3}}, got v={v}")


def tallis_mu(level: float, v: int, rho: float) -> float:
    """Isotropic truncated eigenvalue: c F_{v+2}(rho/c) / F_v(rho/c)."""
    if level <= 0.0 or rho <= 0.0:
        raise ValueError("level and rho must be positive")
    x = rho / level
    return level * chi_square_cdf(v + 2, x) / chi_square_cdf(v, x)


def bisect_isotropic(mu_level: float, v: int, rho: float) -> float:
    """Invert the isotropic damping: the level lam with tallis_mu(lam) = mu_level.

    Brackets [m, 1e6 m] and bisects to relative width 1e-12. The damping is
    strictly increasing in the level, and bounded by rho/3, so levels too
    close to rho/3 are rejected as infeasible.
    """
    if not 0.0 < mu_level < rho / 3.0:
        raise ValueError(f"need 0 < mu_level < rho/3, got {mu_level} vs rho/3 = {rho / 3.0}")
    lo = mu_level
    hi = mu_level * 1e6
    if tallis_mu(hi, v, rho) < mu_level:
        raise ValueError(f"mu_level {mu_level} not reachable within bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tallis_mu(mid, v, rho) < mu_level:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return 0.5 * (lo + hi)


def generating_function(lam, s: float, kind: str = "alpha", index=()):
    """Closed-form generating function whose Taylor coefficients at 0 are the
    series coefficients of the matching ball integral. Accepts complex z
    inside |z| < 1/eta."""
    arr = np.asarray(lam, dtype=float)
    t = 1.0 - s / arr
    if kind == "alpha":
        powers = np.full(arr.size, -0.5)
        pref = float(np.prod(np.sqrt(s / arr)))
    elif kind == "alpha_k":
        (k,) = (index if isinstance(index, (tuple, list)) else (index,))
        powers = np.full(arr.size, -0.5)
        powers[k] = -1.5
        pref = float(np.prod(np.sqrt(s / arr))) * (s / arr[k])
    elif kind == "alpha_jk":
        j, k = index
        powers = np.full(arr.size, -0.5)
        pref = float(np.prod(np.sqrt(s / arr)))
        if j == k:
            powers[k] = -2.5
            pref *= 3.0 * (s / arr[k]) ** 2
        else:
            powers[j] = -1.5
            powers[k] = -1.5
            pref *= (s / arr[j]) * (s / arr[k])
    else:
        raise ValueError(f"unknown kind {kind!r}")

    def psi(z):
        base = 1.0 - np.multiply.outer(np.asarray(z), t)
        return pref * np.prod(base ** powers, axis=-1)

    return psi


def taylor_coefficients(f, count: int, radius: float, n_nodes: int = 256) -> np.ndarray:
    """Taylor coefficients of an analytic f at 0 by differentiation through
    the Cauchy integral: FFT of f sampled on a circle of the given radius."""
    if not 0 < count <= n_nodes:
        raise ValueError("need 0 < count <= n_nodes")
    z = radius * np.exp(2j * math.pi * np.arange(n_nodes) / n_nodes)
    coeffs = np.fft.fft(f(z)) / n_nodes
    return (coeffs[:count] / radius ** np.arange(count)).real
