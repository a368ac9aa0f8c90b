"""Pole order of A^{-1}(z) at z = 1 and the closed-form leading matrix.

The order is found from the nonsingularity chain

    K_i = (B_0perp ... B_{i-1}perp)^T  A^[i]  (C_0perp ... C_{i-1}perp),

where A(1) = B_0 C_0^T and K_i = B_i C_i^T are rank factorizations and the
A^[i] are the bracket matrices built from the derivatives of A at 1.  The
order m is the first i with K_i nonsingular.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .matpoly import MatrixPolynomial, coeff_scale, derivative_at_one, unit_root_multiplicity
from .numla import DEFAULT_TOL, RankFactorization, Tolerances, pinv, rank_factorize

MAX_ORDER = 4


class UnsupportedOrderError(ValueError):
    """Pole order above 4 (K_4 singular) or a bracket order outside 1..4."""


class SequencingError(ValueError):
    """A quantity was requested before the chain defines it."""


class NoPoleError(ValueError):
    """A(1) is nonsingular, so there is no principal part."""


@dataclass(frozen=True)
class ChainLink:
    """K_i with its SVD-based factorization and the complements of B_i, C_i."""

    index: int
    K: np.ndarray
    singular_values: np.ndarray
    threshold: float
    factor: RankFactorization
    B_perp: np.ndarray
    C_perp: np.ndarray
    K_pinv: np.ndarray

    @property
    def nonsingular(self) -> bool:
        return self.factor.r == self.K.shape[0]


@dataclass(frozen=True)
class PoleReport:
    m: int
    mu: int
    n: int
    derivs: tuple[np.ndarray, ...]       # A^(0) .. A^(4)
    A_pinv: np.ndarray
    base: RankFactorization              # A(1) = B_0 C_0^T
    B0_perp: np.ndarray
    C0_perp: np.ndarray
    chain: tuple[ChainLink, ...]         # K_1 .. K_m
    a_brackets: dict[int, np.ndarray]    # A^[1] .. A^[m]
    theta1: np.ndarray | None
    theta2: np.ndarray | None
    n_leading: np.ndarray | None
    warnings: tuple[str, ...] = ()
    scale: float = 1.0                   # largest Taylor-coefficient norm at z = 1

    def B_prod(self, k: int) -> np.ndarray:
        """B_0perp B_1perp ... B_{k}perp (k = -1 gives I)."""
        out = np.eye(self.n)
        if k >= 0:
            out = self.B0_perp
        for link in self.chain[: max(k, 0)]:
            out = out @ link.B_perp
        return out

    def C_prod(self, k: int) -> np.ndarray:
        """C_0perp C_1perp ... C_{k}perp (k = -1 gives I)."""
        out = np.eye(self.n)
        if k >= 0:
            out = self.C0_perp
        for link in self.chain[: max(k, 0)]:
            out = out @ link.C_perp
        return out

    @property
    def C0(self) -> np.ndarray:
        return self.base.C

    def K_singular_values(self) -> list[list[float]]:
        return [link.singular_values.tolist() for link in self.chain]


# ---------------------------------------------------------------------------
# building blocks


def compute_theta(chain: list[ChainLink] | tuple[ChainLink, ...], B0_perp: np.ndarray,
                  C0_perp: np.ndarray, which: int) -> np.ndarray:
    """Theta_1 = C_0perp K_1^+ B_0perp^T, Theta_2 = C_0perp C_1perp K_2^+ B_1perp^T B_0perp^T."""
    if which not in (1, 2):
        raise ValueError("only Theta_1 and Theta_2 are defined")
    if len(chain) < which:
        raise SequencingError(f"Theta_{which} needs K_{which}, chain has {len(chain)} links")
    if which == 1:
        return C0_perp @ chain[0].K_pinv @ B0_perp.T
    Cp = C0_perp @ chain[0].C_perp
    Bp = B0_perp @ chain[0].B_perp
    return Cp @ chain[1].K_pinv @ Bp.T


def compute_a_bracket(derivs, A_pinv: np.ndarray, m: int, brackets: dict[int, np.ndarray],
                      theta1: np.ndarray | None = None, theta2: np.ndarray | None = None) -> np.ndarray:
    """A^[m] for m = 1..4; lower brackets are taken from ``brackets``."""
    if m not in (1, 2, 3, 4):
        raise UnsupportedOrderError(f"bracket order {m} outside 1..4")
    D = derivs
    Ap = A_pinv
    if m == 1:
        return D[1].copy()
    if m == 2:
        return 0.5 * D[2] - D[1] @ Ap @ D[1]
    A2 = brackets[2]
    n = Ap.shape[0]
    I = np.eye(n)
    if theta1 is None:
        raise SequencingError("A^[3] and A^[4] need Theta_1")
    if m == 3:
        left = np.hstack([D[1] @ Ap, A2])
        mid = np.block([[D[1], I], [I, theta1]])
        right = np.vstack([Ap @ D[1], A2])
        return D[3] / 6 - left @ mid @ right
    if theta2 is None:
        raise SequencingError("A^[4] needs Theta_2")
    A3 = brackets[3]
    left = np.hstack([D[1] @ Ap, A2, A3])
    mid = np.block([
        [0.5 * D[2], A2 @ theta1 + D[1] @ Ap, I],
        [Ap @ D[1] + theta1 @ A2, Ap + theta1 @ A2 @ theta1, theta1],
        [I, theta1, theta2],
    ])
    right = np.vstack([Ap @ D[1], A2, A3])
    return D[4] / 24 - left @ mid @ right


def _chain_link(index: int, K: np.ndarray, scale: float, tol: Tolerances) -> ChainLink:
    s = np.linalg.svd(K, compute_uv=False) if K.size else np.zeros(0)
    floor = max(float(s[0]) if s.size else 0.0, scale)
    thr = tol.nonsing_rel * floor
    fac = rank_factorize(K, tol, scale=floor, rel=tol.nonsing_rel)
    if K.size:
        U, _, Vt = np.linalg.svd(K)
        B_perp, C_perp = U[:, fac.r:], Vt[fac.r:].T
    else:
        B_perp = C_perp = np.zeros((0, 0))
    K_pinv = pinv(K, Tolerances(tol.nonsing_rel, tol.nonsing_rel, tol.residual_abs), scale=floor)
    return ChainLink(index, K, s, thr, fac, B_perp, C_perp, K_pinv)


def detect_pole_order(P: MatrixPolynomial, tol: Tolerances = DEFAULT_TOL,
                      max_order: int = MAX_ORDER) -> PoleReport:
    """Run the K-chain until the first nonsingular K_m.

    Raises :class:`UnsupportedOrderError` when K_{max_order} is still
    singular.  Borderline decisions (smallest singular value within a
    factor 10 of the threshold) are recorded in ``report.warnings``.
    """
    if not 1 <= max_order <= MAX_ORDER:
        raise ValueError(f"max_order must lie in 1..{MAX_ORDER}")
    n = P.dim
    derivs = tuple(derivative_at_one(P, k) for k in range(MAX_ORDER + 1))
    A = derivs[0]
    pscale = coeff_scale(P)
    mu = unit_root_multiplicity(P, tol)
    notes: list[str] = []

    base = rank_factorize(A, tol, scale=pscale)
    Ap = pinv(A, tol, scale=pscale)
    if base.r == n:
        return PoleReport(0, mu, n, derivs, Ap, base, np.zeros((n, 0)), np.zeros((n, 0)),
                          (), {}, None, None, None, (), pscale)
    U, _, Vt = np.linalg.svd(A)
    B0p, C0p = U[:, base.r:], Vt[base.r:].T

    chain: list[ChainLink] = []
    brackets: dict[int, np.ndarray] = {}
    theta1 = theta2 = None
    Bp, Cp = B0p, C0p
    m = None
    for i in range(1, max_order + 1):
        brackets[i] = compute_a_bracket(derivs, Ap, i, brackets, theta1, theta2)
        K = Bp.T @ brackets[i] @ Cp
        # the floor guards against roundoff-only K being called nonsingular
        scale = max(float(np.linalg.norm(brackets[i], 2)), pscale)
        link = _chain_link(i, K, scale, tol)
        chain.append(link)
        s = link.singular_values
        if s.size and s[-1] <= 10 * link.threshold and s[-1] > 0.1 * link.threshold:
            notes.append(f"K_{i} singularity is borderline (sigma_min={s[-1]:.3g}, "
                         f"threshold={link.threshold:.3g})")
        if link.nonsingular:
            m = i
            break
        Bp = Bp @ link.B_perp
        Cp = Cp @ link.C_perp
        if i == 1:
            theta1 = compute_theta(chain, B0p, C0p, 1)
        elif i == 2:
            theta2 = compute_theta(chain, B0p, C0p, 2)
    if m is None:
        raise UnsupportedOrderError(
            f"K_{max_order} is singular: pole order exceeds {max_order}")
    if m > mu:
        notes.append(f"pole order {m} exceeds unit-root multiplicity {mu}")
    if m >= 2 and theta1 is None:
        theta1 = compute_theta(chain, B0p, C0p, 1)
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    report = PoleReport(m, mu, n, derivs, Ap, base, B0p, C0p, tuple(chain), brackets,
                        theta1, theta2, None, tuple(notes), pscale)
    N = _leading(report)
    return PoleReport(m, mu, n, derivs, Ap, base, B0p, C0p, tuple(chain), brackets,
                      theta1, theta2, N, tuple(notes), pscale)


def _leading(report: PoleReport) -> np.ndarray:
    m = report.m
    Cp = report.C_prod(m - 1)
    Bp = report.B_prod(m - 1)
    return Cp @ np.linalg.inv(report.chain[m - 1].K) @ Bp.T


def leading_matrix(P: MatrixPolynomial, report: PoleReport) -> np.ndarray:
    """N_{-m} = (C_0perp..C_{m-1}perp) K_m^{-1} (B_0perp..B_{m-1}perp)^T."""
    if report.m == 0:
        raise NoPoleError("A(1) is nonsingular: no principal part")
    return _leading(report)


# ---------------------------------------------------------------------------
# structure of the non-leading principal-part matrices


def lambda_theta(P: MatrixPolynomial, report: PoleReport, principal, theta: int) -> np.ndarray:
    """Convolution term of N_{-m+theta}; ``principal`` is [N_{-m}, ..., N_{-1}]."""
    m = report.m
    if not 1 <= theta < m:
        raise ValueError(f"theta must lie in 1..{m - 1}")
    D, Ap, A = report.derivs, report.A_pinv, report.derivs[0]

    def N(k):  # N_{-m+k}
        return principal[k]

    left = sum(D[j] @ N(theta - j) / math.factorial(j) for j in range(1, theta + 1))
    right = sum(N(theta - j) @ D[j] / math.factorial(j) for j in range(1, theta + 1))
    out = -Ap @ left - right @ Ap
    if theta > 1:
        mid = sum(N(theta - j) @ D[j] / math.factorial(j) for j in range(1, theta))
        out = out + Ap @ A @ mid @ Ap
    return out


@dataclass(frozen=True)
class DecompositionResidual:
    theta: int
    label: str
    left: float
    right: float
    scale: float

    @property
    def relative(self) -> float:
        return max(self.left, self.right) / self.scale


def _space_residual(R, Cp, Bp):
    # R must equal Cp X Bp^T: project out the column space of Cp and row space of Bp^T
    n = R.shape[0]
    PC = np.eye(n) - Cp @ np.linalg.pinv(Cp) if Cp.size else np.eye(n)
    PB = np.eye(n) - Bp @ np.linalg.pinv(Bp) if Bp.size else np.eye(n)
    return float(np.linalg.norm(PC @ R)), float(np.linalg.norm(R @ PB))


def decomposition_check(P: MatrixPolynomial, report: PoleReport, principal) -> list[DecompositionResidual]:
    """Check N_{-m+theta} - Lambda_theta - (explicit terms) lies in the asserted space.

    For every theta the remainder after removing Lambda_theta must lie in
    C_0perp * B_0perp^T.  For theta = 1 (m >= 3) the explicit Theta-terms
    are removed as well and the remainder must lie in the deeper space
    spanned by C_0perp..C_{m-2}perp on the left and B_0perp..B_{m-2}perp on
    the right; likewise for theta = 2 when m = 4.
    """
    m = report.m
    if m < 2:
        return []
    principal = [np.asarray(N, dtype=float) for N in principal]
    scale = max(float(np.linalg.norm(N)) for N in principal) or 1.0
    Nm = principal[0]
    out = []
    D, Ap = report.derivs, report.A_pinv
    A2 = report.a_brackets.get(2)
    A3 = report.a_brackets.get(3)
    th = {1: report.theta1, 2: report.theta2}
    for theta in range(1, m):
        R = principal[theta] - lambda_theta(P, report, principal, theta)
        l, r = _space_residual(R, report.C_prod(0), report.B_prod(0))
        out.append(DecompositionResidual(theta, "base", l, r, scale))
        if theta == 1 and m >= 3:
            R1 = R.copy()
            for j in range(1, m - 1):
                Aj = report.a_brackets[j + 1]
                R1 += th[j] @ Aj @ Nm + Nm @ Aj @ th[j]
            l, r = _space_residual(R1, report.C_prod(m - 2), report.B_prod(m - 2))
            out.append(DecompositionResidual(theta, "refined", l, r, scale))
        if theta == 2 and m == 4:
            B0p, C0p = report.B0_perp, report.C0_perp
            K1 = report.chain[0].K
            K1_ann = np.eye(K1.shape[0]) - K1 @ report.chain[0].K_pinv
            A3_breve = D[3] / 6 - 0.5 * D[2] @ Ap @ D[1]
            A3_dot = D[3] / 6 - 0.5 * D[1] @ Ap @ D[2]
            T1 = report.theta1
            N1 = principal[1]
            R2 = (R + T1 @ A2 @ N1 @ B0p @ K1_ann @ B0p.T + T1 @ A3_dot @ Nm
                  + C0p @ C0p.T @ N1 @ A2 @ T1 + Nm @ A3_breve @ T1)
            l, r = _space_residual(R2, report.C_prod(1), report.B_prod(1))
            out.append(DecompositionResidual(theta, "refined", l, r, scale))
    return out
