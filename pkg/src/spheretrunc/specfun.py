"""Scalar special functions: log-gamma, regularized incomplete gamma,
chi-square CDF, Kummer's confluent hypergeometric M, and the bound ratio
r(v, z) used for lower bounds on truncated eigenvalues.

Everything here is pure, deterministic and double precision. The incomplete
gamma follows the classic two-regime scheme (series for x < a+1, continued
fraction otherwise).
"""

import math

import numpy as np

_MAX_ITER = 20000
_TINY = 1e-300


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if x <= 0.0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def _gamma_p_series(a, x):
    # lower series: P(a,x) = x^a e^-x / Gamma(a+1) * sum x^n / ((a+1)...(a+n))
    if x == 0.0:
        return 0.0
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise RuntimeError("incomplete gamma series did not converge")


def _gamma_q_contfrac(a, x):
    # upper tail Q(a,x) by Lentz's continued fraction
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise RuntimeError("incomplete gamma continued fraction did not converge")


def regularized_gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), a > 0, x >= 0."""
    if a <= 0.0:
        raise ValueError(f"regularized_gamma_p requires a > 0, got {a}")
    if x < 0.0:
        raise ValueError(f"regularized_gamma_p requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return min(_gamma_p_series(a, x), 1.0)
    return min(max(1.0 - _gamma_q_contfrac(a, x), 0.0), 1.0)


def chi_square_cdf(dof: int, x: float) -> float:
    """CDF of a chi-square variable with `dof` degrees of freedom at x."""
    if dof < 1:
        raise ValueError(f"chi_square_cdf requires dof >= 1, got {dof}")
    if x < 0.0:
        raise ValueError(f"chi_square_cdf requires x >= 0, got {x}")
    return regularized_gamma_p(0.5 * dof, 0.5 * x)


def chi_square_cdf_ladder(dof: int, x: float, count: int) -> np.ndarray:
    """CDF values F_{dof + 2j}(x) for j = 0 .. count-1.

    Uses P(a+1, y) = P(a, y) - y^a e^-y / Gamma(a+1) downward from a single
    two-regime evaluation at the smallest dof. The subtraction terms are
    formed by a stable product recurrence, so the whole ladder costs one
    incomplete-gamma call. Accuracy is absolute (~1e-15); entries far down
    the ladder can be dominated by rounding when they are smaller than
    1e-16 * F_{dof}(x), which is harmless for the series using them.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    a0 = 0.5 * dof
    y = 0.5 * x
    f0 = regularized_gamma_p(a0, y)
    if y == 0.0 or f0 == 0.0:
        out = np.zeros(count)
        out[0] = f0
        return out
    log_t0 = a0 * math.log(y) - y - math.lgamma(a0 + 1.0)
    t = np.empty(count)
    t[0] = math.exp(log_t0)
    if t[0] == 0.0:
        # subtraction terms underflow: every CDF equals the first to 1e-300
        return np.full(count, f0)
    if count > 1:
        j = np.arange(1.0, count)
        t[1:] = t[0] * np.cumprod(y / (a0 + j))
    out = f0 - np.concatenate(([0.0], np.cumsum(t[:-1])))
    return np.maximum(out, 0.0)


def kummer_m(a: float, b: float, z: float) -> float:
    """Kummer's M(a, b, z) = sum_n (a)_n / (b)_n z^n / n! by direct recursion.

    Intended for the nonnegative-z, b > a > 0 regime where all terms are
    positive; raises if the arguments fall outside what the series can
    handle in double precision.
    """
    if b <= 0.0 and b == math.floor(b):
        raise ValueError(f"kummer_m undefined for nonpositive integer b = {b}")
    if z < 0.0 or a < 0.0 or b < 0.0:
        raise ValueError("kummer_m implemented for a, b, z >= 0 only")
    term = 1.0
    total = 1.0
    for n in range(_MAX_ITER):
        term *= (a + n) / (b + n) * z / (n + 1.0)
        total += term
        if not math.isfinite(total):
            raise OverflowError(f"kummer_m overflow at a={a}, b={b}, z={z}")
        if term < total * 1e-16:
            return total
    raise RuntimeError("kummer_m series did not converge")


def bound_ratio_r(v: int, z: float) -> float:
    """Ratio r(v, z) = (2v+1) M(v, v+1/2, z) / M(v, v+3/2, z).

    Evaluates both Kummer series jointly with shared rescaling, so the
    ratio stays finite even when the individual sums would overflow
    (z of order several hundred).
    """
    if v < 1:
        raise ValueError(f"bound_ratio_r requires v >= 1, got {v}")
    if z < 0.0:
        raise ValueError(f"bound_ratio_r requires z >= 0, got {z}")
    b1 = v + 0.5
    b2 = v + 1.5
    t1 = t2 = 1.0
    s1 = s2 = 1.0
    for n in range(_MAX_ITER * 20):
        f = (v + n) * z / (n + 1.0)
        t1 *= f / (b1 + n)
        t2 *= f / (b2 + n)
        s1 += t1
        s2 += t2
        if max(t1, t2) < 1e-17 * min(s1, s2):
            return (2.0 * v + 1.0) * s1 / s2
        if s1 > 1e250:
            # rescale jointly; the ratio is unaffected
            t1 *= 1e-250
            t2 *= 1e-250
            s1 *= 1e-250
            s2 *= 1e-250
    raise RuntimeError(f"bound_ratio_r did not converge for v={v}, z={z}")
