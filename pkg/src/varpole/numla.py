"""Rank-revealing linear algebra kernel.

Every rank decision in the package goes through the helpers below so that
the pipeline agrees with itself about which singular values are zero.
All functions accept empty (n x 0 or 0 x n) matrices.

The optional ``scale`` argument sets an absolute floor for the singular
value cutoff: the cutoff is ``rank_rel * max(sigma_max, scale)``.  Without
it a matrix that is zero in exact arithmetic but carries roundoff would be
reported as full rank relative to its own (tiny) largest singular value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared across the package.

    Attributes
    ----------
    rank_rel : float
        Relative singular-value cutoff for rank decisions.
    nonsing_rel : float
        Relative threshold below which the chain matrices K_i count as
        singular.
    residual_abs : float
        Ceiling for verification residuals (Penrose conditions,
        idempotency, annihilation).
    """

    rank_rel: float = 1e-10
    nonsing_rel: float = 1e-8
    residual_abs: float = 1e-9

    def __post_init__(self):
        for name in ("rank_rel", "nonsing_rel", "residual_abs"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.rank_rel < 1:
            raise ValueError("rank_rel must be < 1")


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class RankFactorization:
    """M = B @ C.T with B, C of full column rank r."""

    B: np.ndarray
    C: np.ndarray
    r: int

    def reconstruct(self) -> np.ndarray:
        return self.B @ self.C.T


def _as2d(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {M.shape}")
    return M


def _cutoff(s: np.ndarray, rel: float, scale: float | None) -> float:
    smax = s[0] if s.size else 0.0
    if scale is not None:
        smax = max(smax, float(scale))
    return rel * smax


def _svd(M: np.ndarray, full: bool = False):
    if min(M.shape) == 0:
        p, q = M.shape
        U = np.eye(p) if full else np.zeros((p, 0))
        Vt = np.eye(q) if full else np.zeros((0, q))
        return U, np.zeros(0), Vt
    return np.linalg.svd(M, full_matrices=full)


def numerical_rank(M, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> int:
    """Count singular values above ``rank_rel * sigma_max``."""
    M = _as2d(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    cut = _cutoff(s, tol.rank_rel, scale)
    return int(np.count_nonzero(s > cut)) if s[0] > 0 else 0


def pinv(M, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse from a truncated SVD."""
    M = _as2d(M)
    p, q = M.shape
    if M.size == 0:
        return np.zeros((q, p))
    U, s, Vt = _svd(M)
    cut = _cutoff(s, tol.rank_rel, scale)
    keep = s > cut
    if not keep.any():
        return np.zeros((q, p))
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def rank_factorize(M, tol: Tolerances = DEFAULT_TOL, scale: float | None = None,
                   rel: float | None = None) -> RankFactorization:
    """Symmetric SVD split B = U_r S_r^(1/2), C = V_r S_r^(1/2).

    ``rel`` overrides ``tol.rank_rel`` (the pole chain uses the
    nonsingularity threshold here so that rank and singularity agree).
    """
    M = _as2d(M)
    p, q = M.shape
    if M.size == 0:
        return RankFactorization(np.zeros((p, 0)), np.zeros((q, 0)), 0)
    U, s, Vt = _svd(M)
    cut = _cutoff(s, tol.rank_rel if rel is None else rel, scale)
    r = int(np.count_nonzero(s > cut)) if s[0] > 0 else 0
    root = np.sqrt(s[:r])
    return RankFactorization(U[:, :r] * root, Vt[:r].T * root, r)


def orth_complement(M, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(M).

    For an n x 0 input the identity is returned; for a full-rank square
    input the result is n x 0.
    """
    M = _as2d(M)
    n = M.shape[0]
    if M.shape[1] == 0:
        return np.eye(n)
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    cut = _cutoff(s, tol.rank_rel, scale)
    r = int(np.count_nonzero(s > cut)) if s[0] > 0 else 0
    return U[:, r:].copy()


def range_basis(M, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis of span(M)."""
    M = _as2d(M)
    n = M.shape[0]
    if M.size == 0:
        return np.zeros((n, 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    cut = _cutoff(s, tol.rank_rel, scale)
    r = int(np.count_nonzero(s > cut)) if s[0] > 0 else 0
    return U[:, :r].copy()


def ann_row(G, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    """I - G G^+, the projector that kills the columns of G from the left."""
    G = _as2d(G)
    n = G.shape[0]
    return np.eye(n) - G @ pinv(G, tol, scale)


def ann_col(A, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    """I - A^+ A, the projector that kills the rows of A from the right."""
    A = _as2d(A)
    q = A.shape[1]
    return np.eye(q) - pinv(A, tol, scale) @ A


def penrose_residuals(M, Mp) -> tuple[float, float, float, float]:
    """Max-abs residuals of the four Penrose conditions."""
    M = _as2d(M)
    Mp = _as2d(Mp)

    def amax(X):
        return float(np.max(np.abs(X))) if X.size else 0.0

    MMp = M @ Mp
    MpM = Mp @ M
    return (amax(MMp @ M - M), amax(MpM @ Mp - Mp), amax(MMp.T - MMp), amax(MpM.T - MpM))


def is_idempotent(P, tol: Tolerances = DEFAULT_TOL) -> bool:
    P = _as2d(P)
    return P.shape[0] == P.shape[1] and float(np.max(np.abs(P @ P - P), initial=0.0)) <= tol.residual_abs
