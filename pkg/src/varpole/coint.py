"""Cointegration projectors P_m and their ranks.

P_1 projects onto span(C_0), the row space of A(1).  For higher orders the
projector is 2 (P_1 : Pi_m), where Pi_m removes the directions through
which the deeper principal-part terms leak past P_1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numla import DEFAULT_TOL, Tolerances, ann_row, numerical_rank, pinv, range_basis
from .parsum import bordered_parallel_sum, parallel_sum
from .polecore import PoleReport


@dataclass(frozen=True)
class PiSet:
    """The Pi matrices used for the report's order and the G's they annihilate."""

    m: int
    pis: dict[str, np.ndarray]
    gens: dict[str, np.ndarray]


@dataclass(frozen=True)
class CointegrationResult:
    m: int
    P: np.ndarray
    pis: dict[str, np.ndarray]
    rank: int
    closed_form_rank: int
    rank_formula_terms: dict[str, int]
    bordered_gap: float
    idempotency_residual: float
    consistent: bool
    stationary: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)


def _ref(report: PoleReport, X: np.ndarray, with_pinv: bool = True) -> float:
    # zero reference for G = A^+ X C_perp..: |A^+| max(|X|, coefficient scale), so a
    # roundoff-sized X is not mistaken for a genuine direction
    s = max(float(np.linalg.norm(X, 2)), report.scale)
    return s * float(np.linalg.norm(report.A_pinv, 2)) if with_pinv else s


def _ann(G: np.ndarray, tol: Tolerances, ref: float) -> np.ndarray:
    return ann_row(G, tol, scale=ref)


def generators(report: PoleReport) -> dict[str, np.ndarray]:
    """The matrices whose column spaces the Pi projectors annihilate."""
    Ap, D, br = report.A_pinv, report.derivs, report.a_brackets
    m = report.m
    out = {}
    if m >= 2:
        out["G1"] = Ap @ D[1] @ report.C_prod(0)            # A^+ A^(1) C_0perp
    if m == 2:
        out["G2"] = Ap @ D[1] @ report.C_prod(1)            # A^+ A^(1) C_0perp C_1perp
    if m == 3:
        out["G3"] = Ap @ br[2] @ report.C_prod(2)           # A^+ A^[2] C_0perp C_1perp C_2perp
    if m == 4:
        out["G34"] = Ap @ br[2] @ report.C_prod(0)          # A^+ A^[2] C_0perp
        out["G4"] = Ap @ br[3] @ report.C_prod(3)           # A^+ A^[3] C_0perp..C_3perp
        out["G4_noApinv"] = br[3] @ report.C_prod(3)
    return out


def compute_pi(report: PoleReport, tol: Tolerances = DEFAULT_TOL) -> PiSet:
    m = report.m
    if m < 2:
        raise ValueError("Pi matrices are only needed for m >= 2")
    D, br = report.derivs, report.a_brackets
    g = generators(report)
    pis: dict[str, np.ndarray] = {}
    if m == 2:
        pis["Pi2"] = _ann(g["G2"], tol, _ref(report, D[1]))
    elif m == 3:
        pis["Pi3"] = 2 * parallel_sum(_ann(g["G1"], tol, _ref(report, D[1])), _ann(g["G3"], tol, _ref(report, br[2])), tol)
    else:
        pis["Pi34"] = 2 * parallel_sum(_ann(g["G1"], tol, _ref(report, D[1])), _ann(g["G34"], tol, _ref(report, br[2])), tol)
        pis["Pi4"] = 2 * parallel_sum(pis["Pi34"], _ann(g["G4"], tol, _ref(report, br[3])), tol)
    return PiSet(m, pis, g)


def P1(report: PoleReport, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """(C_0^T)^+ C_0^T."""
    C0 = report.C0
    if C0.shape[1] == 0:
        return np.zeros((report.n, report.n))
    return pinv(C0.T, tol) @ C0.T


def coint_rank(report: PoleReport, pis: PiSet | None = None,
               tol: Tolerances = DEFAULT_TOL) -> tuple[int, dict[str, int]]:
    """Closed-form rank of P_m and the integers entering it."""
    m = report.m
    r0 = report.base.r
    terms = {"r_C0": r0}
    if m == 0:
        return report.n, {"n": report.n}
    if m == 1:
        return r0, terms
    D, br = report.derivs, report.a_brackets
    g = generators(report)
    if m == 2:
        terms["r_G2"] = numerical_rank(g["G2"], tol, scale=_ref(report, D[1]))
        return r0 - terms["r_G2"], terms
    if m == 3:
        G = np.hstack([g["G1"], g["G3"]])
        terms["r_G1_G3"] = numerical_rank(G, tol, scale=max(_ref(report, D[1]), _ref(report, br[2])))
        return r0 - terms["r_G1_G3"], terms
    if pis is None:
        pis = compute_pi(report, tol)
    G = np.hstack([g["G1"], g["G34"]])
    terms["r_G1_G34"] = numerical_rank(G, tol, scale=max(_ref(report, D[1]), _ref(report, br[2])))
    Gamma = range_basis(pis.pis["Pi34"], tol, scale=1.0)
    Xi = range_basis(_ann(g["G4"], tol, _ref(report, br[3])), tol, scale=1.0)
    terms["r_Xi"] = Xi.shape[1]
    terms["r_Xi_Gamma"] = numerical_rank(np.hstack([Xi, Gamma]), tol, scale=1.0)
    return r0 - terms["r_G1_G34"] + terms["r_Xi"] - terms["r_Xi_Gamma"], terms


def xi_variant_ranks(report: PoleReport, tol: Tolerances = DEFAULT_TOL) -> tuple[int, int]:
    """m = 4 rank via Xi built with and without the leading A^+.

    Both variants of the Xi definition are in circulation; returns the two
    closed-form ranks so callers can compare them.
    """
    if report.m != 4:
        raise ValueError("only defined for m = 4")
    pis = compute_pi(report, tol)
    g = generators(report)
    br = report.a_brackets
    r_with, terms = coint_rank(report, pis, tol)
    Gamma = range_basis(pis.pis["Pi34"], tol, scale=1.0)
    Xi = range_basis(_ann(g["G4_noApinv"], tol, _ref(report, br[3], with_pinv=False)), tol, scale=1.0)
    r_without = (terms["r_C0"] - terms["r_G1_G34"] + Xi.shape[1]
                 - numerical_rank(np.hstack([Xi, Gamma]), tol, scale=1.0))
    return r_with, r_without


def compute_P(report: PoleReport, pis: PiSet | None = None,
              tol: Tolerances = DEFAULT_TOL) -> CointegrationResult:
    """P_m from the bordered form, cross-checked against 2 (P_1 : Pi_m)."""
    m, n = report.m, report.n
    if m == 0:
        return CointegrationResult(0, np.eye(n), {}, n, n, {"n": n}, 0.0, 0.0, True, True,
                                   ("stationary system: A(1) nonsingular",))
    P_1 = P1(report, tol)
    notes = []
    if m == 1:
        P, gap, pid = P_1, 0.0, {}
    else:
        if pis is None:
            pis = compute_pi(report, tol)
        Pi = pis.pis[f"Pi{m}"]
        P = bordered_parallel_sum(2 * P_1, 2 * Pi, tol)
        direct = 2 * parallel_sum(P_1, Pi, tol)
        gap = float(np.max(np.abs(P - direct)))
        if gap > tol.residual_abs:
            notes.append(f"bordered and direct parallel sums differ by {gap:.3g}")
        pid = pis.pis
    idem = float(np.max(np.abs(P @ P - P)))
    # projectors have unit scale; without it a roundoff-only P would look full rank
    rank = numerical_rank(P, tol, scale=1.0)
    closed, terms = coint_rank(report, pis, tol)
    consistent = rank == closed and idem <= tol.residual_abs
    if rank != closed:
        notes.append(f"closed-form rank {closed} != numerical rank {rank}")
    return CointegrationResult(m, P, dict(pid), rank, closed, terms, gap, idem, consistent,
                               False, tuple(notes))
