"""Run the closed-form pipeline against the contour oracle over a Smith-model grid.

    python3 scripts/grid_check.py --tops 1,2,3,4 --seeds 25

Prints the worst residual of every check per pole order, and the number
of models on which any check fails.
"""
from __future__ import annotations

import argparse
import time
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from varpole.coint import compute_P, xi_variant_ranks
from varpole.laurent import (
    annihilation_check,
    contour_coefficients,
    toeplitz_reconstruct,
    verify_fundamental_identities,
)
from varpole.polecore import decomposition_check, detect_pole_order, leading_matrix
from varpole.simkit import generate_smith_model, grid_specs

TOLS = {"leading": 1e-8, "identities": 1e-8, "annihilation": 1e-8, "doubling": 1e-8,
        "halving": 1e-8, "imag_leak": 1e-9, "toeplitz": 1e-7, "decomposition": 1e-8}


@dataclass(frozen=True)
class GridConfig:
    ns: tuple[int, ...] = (2, 3, 4, 5)
    tops: tuple[int, ...] = (1, 2, 3, 4)
    seeds: int = 25
    halving: bool = True


def rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def check_model(P, m_known: int, halving: bool) -> dict:
    rep = detect_pole_order(P)
    m = rep.m
    out = {"detected": float(m != m_known)}
    exp = contour_coefficients(P, j_min=-m - 1, j_max=m).with_pole_order(m)
    out["doubling"] = exp.change_on_doubling
    out["imag_leak"] = exp.imag_leak
    out["identities"] = verify_fundamental_identities(exp, P, h_max=2 * m).max_relative
    res = compute_P(rep)
    out["rank"] = float(not res.consistent)
    if m >= 1:
        out["leading"] = rel(leading_matrix(P, rep), exp.coefficient(-m))
        out["annihilation"] = annihilation_check(res.P, exp).max_residual
        out["toeplitz"] = rel(np.stack(toeplitz_reconstruct(P, m).principal), np.stack(exp.principal))
    if m >= 2:
        out["decomposition"] = max(d.relative for d in decomposition_check(P, rep, exp.principal))
    if m == 4:
        a, b = xi_variant_ranks(rep)
        out["xi_disagree"] = float(a != b)
    if halving:
        half = contour_coefficients(P, j_min=exp.j_min, j_max=exp.j_max, radius=exp.radius / 2)
        sc = np.max(np.linalg.norm(exp.coeffs, axis=(1, 2)))
        out["halving"] = float(np.max(np.linalg.norm(half.coeffs - exp.coeffs, axis=(1, 2))) / sc)
    return out


def run(cfg: GridConfig) -> int:
    t0 = time.perf_counter()
    worst: dict = defaultdict(float)
    counts: dict = defaultdict(int)
    failing = 0
    for spec in grid_specs(cfg.ns, cfg.tops, range(cfg.seeds)):
        P, m = generate_smith_model(spec)
        r = check_model(P, m, cfg.halving)
        bad = r["detected"] or r["rank"] or any(r[k] > t for k, t in TOLS.items() if k in r)
        failing += bool(bad)
        for k, v in r.items():
            if k in ("detected", "rank", "xi_disagree"):
                counts[(m, k)] += int(v)
            else:
                worst[(m, k)] = max(worst[(m, k)], v)
    for key in sorted(worst):
        print(f"m = {key[0]}  {key[1]:<14} worst {worst[key]:.2e}")
    for key in sorted(counts):
        print(f"m = {key[0]}  {key[1]:<14} count {counts[key]}")
    print(f"models failing a check: {failing}; {time.perf_counter() - t0:.1f} s")
    return 1 if failing else 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", default="2,3,4,5")
    ap.add_argument("--tops", default="1,2,3,4")
    ap.add_argument("--seeds", type=int, default=25)
    ap.add_argument("--no-halving", action="store_true")
    a = ap.parse_args(argv)
    ints = lambda s: tuple(int(x) for x in s.split(","))  # noqa: E731
    return run(GridConfig(ints(a.ns), ints(a.tops), a.seeds, not a.no_halving))


if __name__ == "__main__":
    raise SystemExit(main())
