"""Parallel sums X : Z = X (X + Z)^+ Z and the projectors built from them.

For idempotent arguments 2 (P : Q) is again idempotent and kills
everything that P or Q kill (on the left), which is how the cointegration
projectors combine several annihilation conditions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numla import DEFAULT_TOL, Tolerances, is_idempotent, numerical_rank, pinv


class NotIdempotentError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectorPair:
    P_R: np.ndarray
    P_S: np.ndarray
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        for name in ("P_R", "P_S"):
            M = np.asarray(getattr(self, name), dtype=float)
            if not is_idempotent(M, self.tol):
                raise NotIdempotentError(f"{name} is not idempotent within {self.tol.residual_abs}")
            object.__setattr__(self, name, M)
        if self.P_R.shape != self.P_S.shape:
            raise ValueError("projectors must have the same shape")

    @classmethod
    def from_annihilators(cls, R, S, tol: Tolerances = DEFAULT_TOL) -> "ProjectorPair":
        """P_R = (R^T)^+ R^T and P_S = (S^T)^+ S^T."""
        R = np.asarray(R, dtype=float)
        S = np.asarray(S, dtype=float)
        return cls(pinv(R.T, tol) @ R.T, pinv(S.T, tol) @ S.T, tol)


def parallel_sum(X, Z, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if X.shape != Z.shape or X.shape[0] != X.shape[1]:
        raise ValueError(f"parallel sum needs equal square shapes, got {X.shape} and {Z.shape}")
    scale = max(np.linalg.norm(X, 2), np.linalg.norm(Z, 2)) if X.size else None
    return X @ pinv(X + Z, tol, scale=scale) @ Z


def combined_projector(pair: ProjectorPair) -> np.ndarray:
    """2 (P_R : P_S)."""
    return 2.0 * parallel_sum(pair.P_R, pair.P_S, pair.tol)


def bordered_parallel_sum(A, B, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """A : B as minus the trailing block of the pseudoinverse of

        [[A, 0, I],
         [0, B, I],
         [I, I, 0]].
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    I, O = np.eye(n), np.zeros((n, n))
    M = np.block([[A, O, I], [O, B, I], [I, I, O]])
    return -pinv(M, tol)[2 * n:, 2 * n:]


def parsum_rank(A, B, tol: Tolerances = DEFAULT_TOL) -> int:
    """r(A) + r(B) - r(A + B), the rank of A : B for idempotent A, B."""
    return numerical_rank(A, tol) + numerical_rank(B, tol) - numerical_rank(np.asarray(A) + np.asarray(B), tol)


def parsum_rank_simplified(A, B, tol: Tolerances = DEFAULT_TOL) -> int | None:
    """r(A) + r(B) - n, valid when B (I - A A^+) = I - A A^+; None otherwise."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    Acomp = np.eye(n) - A @ pinv(A, tol)
    if np.max(np.abs(B @ Acomp - Acomp), initial=0.0) > tol.residual_abs:
        return None
    return numerical_rank(A, tol) + numerical_rank(B, tol) - n
