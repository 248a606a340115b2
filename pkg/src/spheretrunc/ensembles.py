"""Wishart eigenvalue ensembles, mode estimation, and the simulation grid.

Spectra are drawn from W_v(p, p^-1 I_v) (default p = 2v) via the Bartlett
factorization: Sigma = A A' / p with chi-distributed diagonal and standard
normal subdiagonal. Randomness comes from counter-based Philox streams
keyed by (seed, stream_index), so any substream can be regenerated
independently and bit-identically on any worker.
"""

from dataclasses import dataclass

import numpy as np

RNG_ALGORITHM = "philox2x64"

# Reference estimates of the ordered-eigenvalue modes of W_v(2v, (2v)^-1 I_v),
# v = 3..10, obtained from large-sample (~1e6) Grenander mode estimation.
# Bundled so simulation grids and regression tests need not re-estimate them.
REFERENCE_MODES = {
    3: (0.1568, 0.6724, 1.6671),
    4: (0.1487, 0.4921, 1.0112, 1.8507),
    5: (0.1435, 0.4017, 0.7528, 1.2401, 2.0150),
    6: (0.1383, 0.3424, 0.6071, 0.9621, 1.4434, 2.1356),
    7: (0.1344, 0.3039, 0.5138, 0.7854, 1.1269, 1.5789, 2.2190),
    8: (0.1310, 0.2745, 0.4543, 0.6684, 0.9263, 1.2559, 1.6764, 2.2763),
    9: (0.1269, 0.2554, 0.4048, 0.5858, 0.7956, 1.0527, 1.3673, 1.7687, 2.3210),
    10: (0.1258, 0.2399, 0.3693, 0.5288, 0.7032, 0.9111, 1.1603, 1.4624, 1.8473, 2.3775),
}


@dataclass(frozen=True)
class WishartConfig:
    v: int
    p: int | None = None  # defaults to 2v

    def __post_init__(self):
        if self.v < 1:
            raise ValueError("v must be >= 1")
        if self.dof < self.v:
            raise ValueError(f"Wishart needs p >= v, got p={self.dof}, v={self.v}")

    @property
    def dof(self) -> int:
        return 2 * self.v if self.p is None else self.p


@dataclass(frozen=True)
class RngStream:
    """Reproducible substream: same (seed, stream_index) -> same draws."""

    seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=[self.seed % 2**64, self.stream_index % 2**64])
        )


def _bartlett_factor(v, p, rng):
    a = np.zeros((v, v))
    for i in range(v):
        a[i, i] = np.sqrt(rng.standard_gamma(0.5 * (p - i)) * 2.0)
        if i:
            a[i, :i] = rng.standard_normal(i)
    return a


def bartlett_sample(cfg: WishartConfig, rng: RngStream | np.random.Generator) -> np.ndarray:
    """One draw of Sigma ~ W_v(p, p^-1 I_v)."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    a = _bartlett_factor(cfg.v, cfg.dof, gen)
    return (a @ a.T) / cfg.dof


def sample_spectrum(cfg: WishartConfig, rng: RngStream | np.random.Generator) -> np.ndarray:
    """Ascending eigenvalue spectrum of one Wishart draw."""
    return np.linalg.eigvalsh(bartlett_sample(cfg, rng))


def sample_spectra(cfg: WishartConfig, n: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    """n spectra as an (n, v) array, ascending along the last axis.

    Batched draws: all diagonal chi variables first (one vector per
    diagonal position), then the subdiagonal normals.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    v, p = cfg.v, cfg.dof
    a = np.zeros((n, v, v))
    for i in range(v):
        a[:, i, i] = np.sqrt(gen.standard_gamma(0.5 * (p - i), size=n) * 2.0)
        if i:
            a[:, i, :i] = gen.standard_normal((n, i))
    sigma = a @ np.transpose(a, (0, 2, 1)) / p
    return np.linalg.eigvalsh(sigma)


def grenander_mode(sample, r: int, s: float) -> float:
    """Mode location from an ordered sample by inverse-gap weighting:

        (1/2) sum_i (x_i + x_{i+r}) d_i^-s / sum_i d_i^-s,  d_i = x_{i+r} - x_i.

    Exactly shift- and scale-equivariant. Pairs with zero gap (ties) are
    dropped; a sample whose lag-r gaps are all zero is degenerate.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if not 1 <= r < n:
        raise ValueError(f"lag r must be in [1, {n - 1}], got {r}")
    if s <= 0.0:
        raise ValueError("exponent s must be positive")
    gaps = x[r:] - x[:-r]
    keep = gaps > 0.0
    if not keep.any():
        raise ValueError("degenerate sample: all lag-r gaps are zero")
    w = gaps[keep] ** (-s)
    pairs = x[:-r][keep] + x[r:][keep]
    return 0.5 * float((pairs * w).sum() / w.sum())


@dataclass(frozen=True)
class ModeTable:
    v: int
    p: int
    n_samples: int
    modes: np.ndarray
    r: int
    s: float
    seed: int

    def to_csv(self) -> str:
        lines = ["v,p,k,mode,r,s,N,seed"]
        for k, mode in enumerate(self.modes, start=1):
            lines.append(
                f"{self.v},{self.p},{k},{mode!r},{self.r},{self.s!r},"
                f"{self.n_samples},{self.seed}"
            )
        return "\n".join(lines) + "\n"


def mode_table(cfg: WishartConfig, n_samples: int, rng: RngStream,
               r: int | None = None, s: float = 5.0) -> ModeTable:
    """Grenander mode estimates for every ordered eigenvalue.

    Defaults r = max(1, n/100) and s = 5.0 were calibrated against the
    bundled reference modes; both remain configurable.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    if r is None:
        r = max(1, n_samples // 100)
    spectra = sample_spectra(cfg, n_samples, rng)
    modes = np.array([grenander_mode(spectra[:, k], r, s) for k in range(cfg.v)])
    return ModeTable(v=cfg.v, p=cfg.dof, n_samples=n_samples, modes=modes,
                     r=r, s=s, seed=rng.seed)


def rho_grid(modes) -> np.ndarray:
    """Simulation radii: each eigenvalue mode plus half the smallest and
    twice the largest, sorted ascending (v + 2 values spanning the strong
    truncation, crossover and weak truncation regimes)."""
    m = np.asarray(modes.modes if isinstance(modes, ModeTable) else modes, dtype=float)
    if m.ndim != 1 or m.size < 1 or np.any(m <= 0.0):
        raise ValueError("modes must be a 1-d array of positive values")
    return np.sort(np.concatenate([m, [0.5 * m.min(), 2.0 * m.max()]]))
