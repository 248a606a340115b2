"""Chi-square series evaluation of Gaussian integrals over centered balls.

A centered normal N(0, diag(lam)) restricted to the ball {x : x'x < rho}
has probability content alpha and second-moment integrals alpha_k (one
factor x_k^2/lam_k inserted) and alpha_jk (two factors). Each admits a
series of chi-square CDFs,

    alpha     = sum_m c_m       F_{v+2m}(rho/s),
    alpha_k   = sum_m c_{k;m}   F_{v+2(m+1)}(rho/s),
    alpha_jk  = sum_m c_{jk;m}  F_{v+2(m+2)}(rho/s),

whose coefficients obey two-term recursions driven by the power sums of
t_i = 1 - s/lam_i. With the scale s = 2*lam_min*lam_max/(lam_min+lam_max)
the contraction factor eta = max_i |t_i| is < 1 and every discarded tail
carries a rigorous upper bound, so each integral is evaluated to a
certified absolute error.

Eigenvalue order does not matter here; ascending order is a contract of
the truncation layer, not of the series.
"""

import math
from dataclasses import dataclass

import numpy as np

from .specfun import chi_square_cdf_ladder

HARD_TERM_CAP = 100_000

# family kinds and the dof shift of their chi-square ladder
_SHIFT = {"alpha": 0, "alpha_k": 1, "alpha_jk": 2}


class ConvergenceError(RuntimeError):
    """Residual bound failed to drop below tolerance within the term cap."""


@dataclass(frozen=True)
class RubenSeries:
    """One truncated chi-square series: coefficients c[0..k_th-1] plus the
    data needed to evaluate and bound it."""

    kind: str
    index: tuple
    v: int
    s: float
    eta: float
    epsilon: float
    k_th: int
    c: np.ndarray


@dataclass(frozen=True)
class BallIntegrals:
    """Ball integrals at one radius, each entry within `epsilon` absolute."""

    alpha: float
    alpha_k: np.ndarray | None
    alpha_jk: np.ndarray | None
    rho: float
    epsilon: float


def _as_lambda(lam) -> np.ndarray:
    arr = np.asarray(lam, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("eigenvalue spectrum must be a nonempty 1-d array")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("eigenvalues must be finite and strictly positive")
    return arr


def choose_scale(lam) -> float:
    """Series scale s = 2 lam_min lam_max / (lam_min + lam_max).

    Guarantees eta = max_i |1 - s/lam_i| = (lam_max-lam_min)/(lam_max+lam_min) < 1.
    """
    arr = _as_lambda(lam)
    lo = float(arr.min())
    hi = float(arr.max())
    return 2.0 * lo * hi / (lo + hi)


def _normalize_index(kind, index, v):
    if kind == "alpha":
        return ()
    if kind == "alpha_k":
        k = int(index[0]) if isinstance(index, (tuple, list, np.ndarray)) else int(index)
        if not 0 <= k < v:
            raise IndexError(f"alpha_k index {k} out of range for v={v}")
        return (k,)
    if kind == "alpha_jk":
        j, k = (int(index[0]), int(index[1]))
        if not (0 <= j < v and 0 <= k < v):
            raise IndexError(f"alpha_jk index {(j, k)} out of range for v={v}")
        return (j, k)
    raise ValueError(f"unknown series kind {kind!r}")


def coeffs_alpha(lam, s: float, n: int) -> np.ndarray:
    """First n coefficients of the alpha expansion at scale s."""
    return _coeffs(lam, s, "alpha", (), n)


def coeffs_alpha_k(lam, s: float, k: int, n: int) -> np.ndarray:
    """First n coefficients of the alpha_k expansion (0-based k)."""
    return _coeffs(lam, s, "alpha_k", (k,), n)


def coeffs_alpha_jk(lam, s: float, j: int, k: int, n: int) -> np.ndarray:
    """First n coefficients of the alpha_jk expansion (0-based j, k)."""
    return _coeffs(lam, s, "alpha_jk", (j, k), n)


def _coeffs(lam, s, kind, index, n):
    arr = _as_lambda(lam)
    if n < 1:
        raise ValueError("need at least one coefficient")
    index = _normalize_index(kind, index, arr.size)
    t = 1.0 - s / arr
    powers = _power_table(t, n)
    g = _family_g(powers, kind, index)
    c0 = _family_c0(arr, s, kind, index)
    return _recursion(g, c0, n)


def _power_table(t, n):
    # rows m = 0..n of t_i^m
    v = t.size
    p = np.empty((n + 1, v))
    p[0] = 1.0
    if n:
        np.cumprod(np.broadcast_to(t, (n, v)), axis=0, out=p[1:])
    return p


def _family_g(powers, kind, index):
    g = powers.sum(axis=1)
    if kind == "alpha_k":
        return g + 2.0 * powers[:, index[0]]
    if kind == "alpha_jk":
        j, k = index
        return g + 2.0 * powers[:, j] + 2.0 * powers[:, k]
    return g


def _family_c0(lam, s, kind, index):
    c0 = float(np.prod(np.sqrt(s / lam)))
    if kind == "alpha_k":
        return (s / lam[index[0]]) * c0
    if kind == "alpha_jk":
        j, k = index
        return (1.0 + 2.0 * (j == k)) * (s / lam[j]) * (s / lam[k]) * c0
    return c0


def _recursion(g, c0, n):
    c = np.empty(n)
    c[0] = c0
    for m in range(1, n):
        c[m] = (g[m:0:-1] * c[:m]).sum() / (2.0 * m)
    return c


def _log_bound_base(v, s, eta, rho, shift, count):
    """log of the tail bound divided by its family prefactor, for n = 1..count.

    The bound for a family with first coefficient p and ladder shift d is
    p * eta^n / n! * (1-eta)^-(v/2+n+d) * Gamma(v/2+n+d)/Gamma(v/2)
      * F_{v+2(n+d)}[(1-eta) rho / s].
    """
    n = np.arange(1, count + 1)
    a0 = 0.5 * v
    lg_num = np.cumsum(np.log(a0 + np.arange(count + 2)))  # lgamma(a0+m+1)-lgamma(a0)
    lg_fact = np.cumsum(np.log(n))  # lgamma(n+1)
    x_red = (1.0 - eta) * rho / s
    ladder = chi_square_cdf_ladder(v, x_red, count + shift + 2)
    # the ladder is only absolutely accurate: entries below ~1e-16 * F_v are
    # rounding noise, so cap with the rigorous series bound
    # P(a, y) <= y^a e^-y / Gamma(a+1) / (1 - y/(a+1))  (valid for y < a+1),
    # which keeps the factorial decay the tail bound relies on
    f = ladder[shift + 1 : shift + 1 + count] + 1e-15 * ladder[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_f = np.log(f)
        y = 0.5 * x_red
        a = a0 + n + shift
        if y > 0.0:
            lgamma_a1 = math.lgamma(a0) + lg_num[n + shift - 1] + np.log(a)
            decay = a * math.log(y) - y - lgamma_a1 - np.log1p(-y / (a + 1.0))
            log_f = np.where(y < a + 1.0, np.minimum(log_f, decay), log_f)
    return (
        n * math.log(eta)
        - lg_fact
        - (a0 + n + shift) * math.log1p(-eta)
        + lg_num[n + shift - 1]
        + log_f
    )


class RubenEvaluator:
    """Evaluates all ball integrals for one spectrum with coefficient reuse.

    Coefficient arrays are grown geometrically and kept per family group, so
    repeated evaluations at increasing radii extend rather than recompute
    them. Growth allocates fresh arrays (copy-on-grow), which keeps
    concurrent readers of previously returned data safe.
    """

    def __init__(self, lam, epsilon: float = 1e-14):
        if epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        self.lam = _as_lambda(lam)
        self.v = self.lam.size
        self.epsilon = float(epsilon)
        lo = float(self.lam.min())
        hi = float(self.lam.max())
        self.s = 2.0 * lo * hi / (lo + hi)
        self.t = 1.0 - self.s / self.lam
        self.eta = float(np.max(np.abs(self.t)))
        self.c0 = float(np.prod(np.sqrt(self.s / self.lam)))
        self._powers = _power_table(self.t, 0)
        self._blocks: dict = {}
        self._log_pref_cache: dict = {}

    def _jk_pairs(self):
        return [(j, k) for j in range(self.v) for k in range(j, self.v)]

    def _log_pref(self, group):
        # log prefactors of the residual bounds, one entry per family
        pref = self._log_pref_cache.get(group)
        if pref is None:
            w = self.s / self.lam
            if group == "ak":
                pref = np.log(np.concatenate(([self.c0], w * self.c0)))
            else:
                pref = np.log(np.array(
                    [(1.0 + 2.0 * (j == k)) * w[j] * w[k] * self.c0
                     for j, k in self._jk_pairs()]))
            self._log_pref_cache[group] = pref
        return pref

    # -- residual bounds and thresholds ------------------------------------

    def residual_bound(self, rho: float, n: int, kind: str = "alpha", index=()) -> float:
        """Upper bound on the absolute value of the discarded tail from term n on."""
        if n < 1:
            raise ValueError("tail bound defined for n >= 1")
        if rho <= 0.0:
            raise ValueError("rho must be positive")
        if self.eta == 0.0:
            return 0.0
        index = _normalize_index(kind, index, self.v)
        base = _log_bound_base(self.v, self.s, self.eta, rho, _SHIFT[kind], n)[-1]
        logp = math.log(_family_c0(self.lam, self.s, kind, index))
        return math.exp(min(logp + base, 700.0))

    def k_threshold(self, rho: float, kind: str = "alpha", index=()) -> int:
        """Smallest n >= 1 whose tail bound drops below epsilon."""
        index = _normalize_index(kind, index, self.v)
        if self.eta == 0.0:
            return 1
        logp = math.log(_family_c0(self.lam, self.s, kind, index))
        return int(self._thresholds(rho, _SHIFT[kind], np.array([logp]))[0])

    def _thresholds(self, rho, shift, log_prefs):
        """First n with bound < epsilon, vectorized over family prefactors."""
        if self.eta == 0.0:
            return np.ones(log_prefs.size, dtype=int)
        log_eps = math.log(self.epsilon)
        count = 64
        while True:
            base = _log_bound_base(self.v, self.s, self.eta, rho, shift, count)
            below = base[None, :] < (log_eps - log_prefs[:, None])
            found = below.any(axis=1)
            if found.all():
                return below.argmax(axis=1) + 1
            if count >= HARD_TERM_CAP:
                raise ConvergenceError(
                    f"series tail bound stuck above epsilon={self.epsilon} "
                    f"after {HARD_TERM_CAP} terms (eta={self.eta}, rho={rho})"
                )
            count = min(count * 4, HARD_TERM_CAP)

    # -- coefficients -------------------------------------------------------

    def _ensure_powers(self, n):
        if self._powers.shape[0] <= n:
            self._powers = _power_table(self.t, max(n, 2 * self._powers.shape[0]))
        return self._powers

    def _block_families(self, group):
        if group == "ak":
            return [("alpha", ())] + [("alpha_k", (k,)) for k in range(self.v)]
        return [("alpha_jk", idx) for idx in self._jk_pairs()]

    def _ensure_block(self, group, n):
        block = self._blocks.get(group)
        if block is not None and block["n"] >= n:
            return block
        fams = self._block_families(group)
        n_new = max(n, 2 * block["n"]) if block is not None else n
        powers = self._ensure_powers(n_new)
        gmat = np.empty((n_new, len(fams)))
        c = np.empty((n_new, len(fams)))
        for f, (kind, index) in enumerate(fams):
            gmat[:, f] = _family_g(powers[:n_new], kind, index)
            c[0, f] = _family_c0(self.lam, self.s, kind, index)
        start = 1
        if block is not None:
            c[: block["n"]] = block["c"]
            start = block["n"]
        for m in range(start, n_new):
            c[m, :] = (gmat[m:0:-1] * c[:m, :]).sum(axis=0) / (2.0 * m)
        block = {"n": n_new, "c": c}
        self._blocks[group] = block
        return block

    def coefficients(self, kind: str, index=(), n: int = 1) -> np.ndarray:
        """Coefficients c[0..n-1] for one family, from the shared block cache."""
        index = _normalize_index(kind, index, self.v)
        group = "jk" if kind == "alpha_jk" else "ak"
        block = self._ensure_block(group, n)
        fams = self._block_families(group)
        col = fams.index((kind, index))
        return block["c"][:n, col].copy()

    # -- series evaluation ----------------------------------------------------

    def ruben_series(self, rho: float, kind: str = "alpha", index=()) -> RubenSeries:
        index = _normalize_index(kind, index, self.v)
        k_th = self.k_threshold(rho, kind, index)
        return RubenSeries(
            kind=kind,
            index=index,
            v=self.v,
            s=self.s,
            eta=self.eta,
            epsilon=self.epsilon,
            k_th=k_th,
            c=self.coefficients(kind, index, k_th),
        )

    def series_sum(self, rho: float, kind: str = "alpha", index=(), n_terms: int | None = None) -> float:
        """Partial series sum with an explicit number of terms (defaults to k_th)."""
        index = _normalize_index(kind, index, self.v)
        if n_terms is None:
            n_terms = self.k_threshold(rho, kind, index)
        shift = _SHIFT[kind]
        c = self.coefficients(kind, index, n_terms)
        ladder = chi_square_cdf_ladder(self.v, rho / self.s, n_terms + shift)
        return float(c @ ladder[shift : shift + n_terms])

    def integrals(self, rho: float, want: str = "all", extra_terms: int = 0) -> BallIntegrals:
        """Evaluate the requested integrals at one radius.

        want: "alpha", "alpha_and_k", or "all" (adds the v x v alpha_jk matrix).
        extra_terms pads every series beyond its own k_th (testing hook).
        """
        if rho <= 0.0:
            raise ValueError("rho must be positive")
        if want not in ("alpha", "alpha_and_k", "all"):
            raise ValueError(f"unknown want={want!r}")
        n_ak = self._thresholds(rho, 0, self._log_pref("ak")[:1])
        if want != "alpha":
            n_k = self._thresholds(rho, 1, self._log_pref("ak")[1:])
            n_ak = np.concatenate([n_ak, n_k])
        n_ak = n_ak + extra_terms
        block = self._ensure_block("ak", int(n_ak.max()))
        ladder = chi_square_cdf_ladder(self.v, rho / self.s, int(n_ak.max()) + 3)

        def partial(col, n, shift):
            return float(block["c"][:n, col] @ ladder[shift : shift + n])

        alpha = min(partial(0, int(n_ak[0]), 0), 1.0)
        alpha_k = None
        alpha_jk = None
        if want != "alpha":
            alpha_k = np.array(
                [partial(1 + k, int(n_ak[1 + k]), 1) for k in range(self.v)]
            )
        if want == "all":
            n_jk = self._thresholds(rho, 2, self._log_pref("jk")) + extra_terms
            jk_block = self._ensure_block("jk", int(n_jk.max()))
            if ladder.shape[0] < int(n_jk.max()) + 4:
                ladder = chi_square_cdf_ladder(self.v, rho / self.s, int(n_jk.max()) + 4)
            alpha_jk = np.empty((self.v, self.v))
            for col, (j, k) in enumerate(self._jk_pairs()):
                n = int(n_jk[col])
                val = float(jk_block["c"][:n, col] @ ladder[2 : 2 + n])
                alpha_jk[j, k] = alpha_jk[k, j] = val
        return BallIntegrals(alpha=alpha, alpha_k=alpha_k, alpha_jk=alpha_jk,
                             rho=rho, epsilon=self.epsilon)


def k_threshold(lam, rho: float, kind: str = "alpha", epsilon: float = 1e-14, index=()) -> int:
    """Smallest series length whose residual bound falls below epsilon."""
    return RubenEvaluator(lam, epsilon).k_threshold(rho, kind, index)


def residual_bound(series: RubenSeries, rho: float, n: int) -> float:
    """Tail bound of a built series at a (possibly different) radius."""
    if series.eta >= 1.0:
        raise ValueError("residual bound requires eta < 1")
    if series.eta == 0.0:
        return 0.0
    base = _log_bound_base(series.v, series.s, series.eta, rho, _SHIFT[series.kind], n)[-1]
    logp = math.log(series.c[0])
    return math.exp(min(logp + base, 700.0))


def eval_integrals(lam, rho: float, epsilon: float = 1e-14, want: str = "all") -> BallIntegrals:
    """One-shot evaluation of alpha (and optionally alpha_k, alpha_jk)."""
    return RubenEvaluator(lam, epsilon).integrals(rho, want)
