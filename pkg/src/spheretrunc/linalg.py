"""Dense symmetric eigen-decomposition and small matrix helpers.

The eigensolver is a cyclic Jacobi rotation scheme: adequate and fully
deterministic for the small (v <= ~12) covariance matrices this library
works with. Eigenvalues are always returned in ascending order.
"""

from dataclasses import dataclass

import numpy as np

_JACOBI_SWEEPS = 100


@dataclass(frozen=True)
class EigDecomp:
    """Eigenvalues (ascending) and the orthogonal matrix of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def symmetrize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def inf_norm(m: np.ndarray) -> float:
    """Max over rows of the sum of absolute entries."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if not np.all(np.isfinite(m)):
        raise ValueError("inf_norm requires finite entries")
    return float(np.abs(m).sum(axis=1).max())


def eigh(s: np.ndarray) -> EigDecomp:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Converges when the off-diagonal Frobenius norm drops below
    1e-13 * ||S||_F. Raises on non-finite or non-symmetric input.
    """
    a = np.array(s, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("eigh requires finite entries")
    scale = np.linalg.norm(a)
    if not np.allclose(a, a.T, atol=1e-10 * max(scale, 1.0)):
        raise ValueError("eigh requires a symmetric matrix")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    r = np.eye(n)
    if n == 1:
        return EigDecomp(np.array([a[0, 0]]), r)
    tol = 1e-13 * max(scale, 1e-300)
    for _ in range(_JACOBI_SWEEPS):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * c
                # rotate rows/columns p and q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - sn * aq
                a[q, :] = sn * ap + c * aq
                rp = r[:, p].copy()
                rq = r[:, q].copy()
                r[:, p] = c * rp - sn * rq
                r[:, q] = sn * rp + c * rq
    else:
        raise RuntimeError("Jacobi eigensolver did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return EigDecomp(w[order], r[:, order])


def compose(eigenvalues: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Rebuild R diag(w) R^T, symmetrized against round-off."""
    w = np.asarray(eigenvalues, dtype=float)
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1] or w.shape != (r.shape[0],):
        raise ValueError(
            f"dimension mismatch: eigenvalues {w.shape}, eigenvectors {r.shape}"
        )
    return symmetrize((r * w) @ r.T)
