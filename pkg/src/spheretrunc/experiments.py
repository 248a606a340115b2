"""Monte Carlo convergence-rate study of the reconstruction schemes.

For each radius rho in the simulation grid, draw spectra from the Wishart
ensemble, truncate them, reconstruct with the configured scheme and record
the iteration count n_it (or the failure). Runs are keyed by
(rho, beta, stream_index) with per-pair Philox substreams, so results are
independent of execution order and worker count, and two runs with the
same seed produce byte-identical CSV output.

The mean iteration count follows log nbar_it = a - b log rho in the strong
truncation window; `fit_scaling` estimates (a, b) with delete-one jackknife
errors and `fit_kappa` extracts the slope of a versus the dimension v.
"""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from .ensembles import RngStream, WishartConfig, mode_table, rho_grid, sample_spectrum
from .reconstruction import SolverConfig, solve
from .truncation import truncate_spectrum

# substream reserved for mode estimation when the grid is derived on the fly
MODE_STREAM_INDEX = 2**48

CSV_FIELDS = ("v", "p", "rho", "beta", "scheme", "stream_index",
              "status", "n_it", "n_cond", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    v: int
    n_samples: int
    p: int | None = None
    rho_values: tuple | None = None  # None: derive from estimated modes
    scheme: str = "gjor"
    beta_grid: tuple | None = None  # boosted default: 0 to 2 in steps of 1/5
    eps_t: float = 1e-7
    epsilon: float = 1e-14
    warmup: int = 40
    max_iter: int = 1_000_000
    seed: int = 0
    threads: int = 1
    mode_samples: int = 100_000

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2 (jackknife needs leave-one-out)")
        if self.eps_t <= 0.0 or self.epsilon <= 0.0:
            raise ValueError("tolerances must be positive")

    @property
    def dof(self) -> int:
        return 2 * self.v if self.p is None else self.p

    def betas(self) -> tuple:
        if self.scheme != "boosted":
            return (0.0,)
        if self.beta_grid is None:
            return tuple(round(0.2 * i, 10) for i in range(11))
        return tuple(self.beta_grid)


@dataclass(frozen=True)
class StudyRow:
    v: int
    p: int
    rho: float
    beta: float
    scheme: str
    stream_index: int
    status: str
    n_it: int
    n_cond: float
    seed: int


@dataclass(frozen=True)
class ExperimentRecord:
    """Converged iteration counts and failure count for one (rho, beta) cell."""

    rho: float
    beta: float
    n_its: tuple
    n_failures: int

    @property
    def mean_n_it(self) -> float:
        return float(np.mean(self.n_its)) if self.n_its else math.nan


@dataclass(frozen=True)
class ScalingFit:
    a: float
    b: float
    a_err: float
    b_err: float
    beta: float
    window_max_rho: float
    n_rho: int
    n_runs: int
    residuals: tuple


@dataclass(frozen=True)
class KappaFit:
    a0: float
    kappa: float
    beta: float
    n_points: int


def resolve_rho_values(cfg: ExperimentConfig) -> tuple:
    if cfg.rho_values is not None:
        return tuple(float(r) for r in cfg.rho_values)
    table = mode_table(WishartConfig(cfg.v, cfg.p), cfg.mode_samples,
                       RngStream(cfg.seed, MODE_STREAM_INDEX))
    return tuple(float(r) for r in rho_grid(table))


def _run_block(args):
    """All runs for one rho and a contiguous range of sample indices."""
    cfg, rho, rho_idx, lo, hi = args
    wcfg = WishartConfig(cfg.v, cfg.p)
    rows = []
    for sample_idx in range(lo, hi):
        stream_index = rho_idx * cfg.n_samples + sample_idx
        stream = RngStream(cfg.seed, stream_index)
        lam = sample_spectrum(wcfg, stream)
        n_cond = float(lam[-1] / lam[0])
        trunc = truncate_spectrum(lam, rho, cfg.epsilon)
        for beta in cfg.betas():
            trace = solve(trunc, SolverConfig(
                scheme=cfg.scheme, beta=beta, eps_t=cfg.eps_t,
                max_iter=cfg.max_iter, warmup=cfg.warmup, epsilon=cfg.epsilon))
            rows.append(StudyRow(
                v=cfg.v, p=cfg.dof, rho=rho, beta=beta, scheme=cfg.scheme,
                stream_index=stream_index, status=trace.status,
                n_it=trace.n_it, n_cond=n_cond, seed=cfg.seed))
    return rows


def run_convergence_study(cfg: ExperimentConfig, rho_values=None) -> list:
    """Execute the full sweep; rows come back sorted by (rho, beta, stream)."""
    rhos = tuple(rho_values) if rho_values is not None else resolve_rho_values(cfg)
    chunk = max(1, min(32, cfg.n_samples // max(1, 2 * cfg.threads)))
    tasks = []
    for rho_idx, rho in enumerate(rhos):
        for lo in range(0, cfg.n_samples, chunk):
            tasks.append((cfg, float(rho), rho_idx, lo, min(lo + chunk, cfg.n_samples)))
    rows = []
    if cfg.threads <= 1:
        for task in tasks:
            rows.extend(_run_block(task))
    else:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            for block in pool.map(_run_block, tasks):
                rows.extend(block)
    rows.sort(key=lambda r: (r.rho, r.beta, r.stream_index))
    return rows


def write_study_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in rows:
            writer.writerow([r.v, r.p, repr(r.rho), repr(r.beta), r.scheme,
                             r.stream_index, r.status, r.n_it, repr(r.n_cond), r.seed])


def read_study_csv(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(StudyRow(
                v=int(rec["v"]), p=int(rec["p"]), rho=float(rec["rho"]),
                beta=float(rec["beta"]), scheme=rec["scheme"],
                stream_index=int(rec["stream_index"]), status=rec["status"],
                n_it=int(rec["n_it"]), n_cond=float(rec["n_cond"]),
                seed=int(rec["seed"])))
    return rows


def collect_records(rows) -> list:
    cells = {}
    for r in rows:
        cells.setdefault((r.rho, r.beta), []).append(r)
    records = []
    for (rho, beta), cell in sorted(cells.items()):
        n_its = tuple(r.n_it for r in cell if r.status == "converged")
        records.append(ExperimentRecord(
            rho=rho, beta=beta, n_its=n_its,
            n_failures=sum(1 for r in cell if r.status != "converged")))
    return records


def _line_fit(log_rho, log_mean):
    # log nbar = a - b log rho
    slope, intercept = np.polyfit(log_rho, log_mean, 1)
    return float(intercept), float(-slope)


def fit_scaling(rows, beta: float = 0.0, window_max_rho: float = 1.0) -> ScalingFit:
    """Least-squares (a, b) on the strong-truncation window with delete-one
    jackknife errors (each converged run is one jackknife unit)."""
    used = [r for r in rows
            if r.status == "converged" and r.beta == beta
            and r.rho <= window_max_rho * (1.0 + 1e-12)]
    groups: dict = {}
    for r in used:
        groups.setdefault(r.rho, []).append(r.n_it)
    if len(groups) < 2:
        raise ValueError(f"scaling fit needs >= 2 rho points in the window, got {len(groups)}")
    if any(len(v) < 2 for v in groups.values()):
        raise ValueError("scaling fit needs >= 2 converged runs per rho")

    rhos = np.array(sorted(groups))
    sums = np.array([math.fsum(groups[r]) for r in rhos])
    counts = np.array([len(groups[r]) for r in rhos], dtype=float)
    log_rho = np.log(rhos)
    log_mean = np.log(sums / counts)
    a_hat, b_hat = _line_fit(log_rho, log_mean)
    residuals = tuple(log_mean - (a_hat - b_hat * log_rho))

    reps = []
    for gi, r in enumerate(rhos):
        for n_it in groups[r]:
            loo = log_mean.copy()
            loo[gi] = math.log((sums[gi] - n_it) / (counts[gi] - 1.0))
            reps.append(_line_fit(log_rho, loo))
    reps = np.array(reps)
    m = len(reps)
    factor = (m - 1.0) / m
    a_err = math.sqrt(factor * ((reps[:, 0] - reps[:, 0].mean()) ** 2).sum())
    b_err = math.sqrt(factor * ((reps[:, 1] - reps[:, 1].mean()) ** 2).sum())
    return ScalingFit(a=a_hat, b=b_hat, a_err=a_err, b_err=b_err, beta=beta,
                      window_max_rho=window_max_rho, n_rho=len(rhos),
                      n_runs=len(used), residuals=residuals)


def fit_kappa(a_by_v, beta: float = 0.0) -> KappaFit:
    """OLS of the scaling intercept a against the dimension v: a = a0 + kappa v."""
    pairs = sorted((int(v), float(a)) for v, a in a_by_v)
    if len(pairs) < 3:
        raise ValueError("kappa fit needs at least 3 dimensions")
    vs = np.array([p[0] for p in pairs], dtype=float)
    avals = np.array([p[1] for p in pairs])
    kappa, a0 = np.polyfit(vs, avals, 1)
    return KappaFit(a0=float(a0), kappa=float(kappa), beta=beta, n_points=len(pairs))


def config_dict(cfg: ExperimentConfig, rho_values=None) -> dict:
    """JSON-ready provenance block recorded alongside every output."""
    out = asdict(cfg)
    out["p"] = cfg.dof
    if rho_values is not None:
        out["rho_values"] = [float(r) for r in rho_values]
    out["rng"] = {"algorithm": "philox2x64", "key": "(seed, stream_index)"}
    return out
