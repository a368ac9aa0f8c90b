"""Variance-growth diagnostics on simulated Smith models and the cointegrated pair.

    python3 scripts/simulation_diagnostics.py --T 4000 --reps 20

For each model, counts the seeds on which the m-th difference is flagged
stationary while the (m-1)-th is not, and the seeds on which P_m y is
flagged stationary.
"""
from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

import numpy as np

from varpole.coint import compute_P
from varpole.matpoly import from_var
from varpole.polecore import detect_pole_order
from varpole.simkit import (
    STATIONARY_SLOPE,
    Trajectory,
    generate_smith_model,
    grid_specs,
    integration_diagnostics,
    simulate_var_batch,
)


@dataclass(frozen=True)
class SimConfig:
    ns: tuple[int, ...] = (2, 3, 4, 5)
    tops: tuple[int, ...] = (1, 2)
    models_per_cell: int = 25
    T: int = 4000
    reps: int = 20
    threshold: float = STATIONARY_SLOPE
    with_projector: bool = False


def score(P, m: int, cfg: SimConfig, P_m=None) -> tuple[float, float | None]:
    seeds = range(cfg.reps)
    Y = simulate_var_batch(P, cfg.T, seeds)
    order_hits, proj_hits = 0, 0
    for s, y in zip(seeds, Y):
        d = integration_diagnostics(Trajectory(cfg.T, y, np.eye(P.dim), s), m, P_m, cfg.threshold)
        order_hits += d.differences[m].stationary and (m == 0 or not d.differences[m - 1].stationary)
        proj_hits += d.projected is not None and d.projected.stationary
    return order_hits / cfg.reps, (proj_hits / cfg.reps if P_m is not None else None)


def run(cfg: SimConfig) -> int:
    t0 = time.perf_counter()
    rates, proj = [], []
    for spec in grid_specs(cfg.ns, cfg.tops, range(cfg.models_per_cell)):
        P, m = generate_smith_model(spec)
        P_m = compute_P(detect_pole_order(P)).P if cfg.with_projector else None
        r, p = score(P, m, cfg, P_m)
        rates.append(r)
        if p is not None:
            proj.append(p)
        if r < 0.9:
            print(f"low concordance {r:.2f}: n = {spec.n}, degrees = {spec.degrees}, seed = {spec.seed}")
    pair = from_var([[[0.5, 0.5], [0.5, 0.5]]])
    _, pair_rate = score(pair, 1, cfg, compute_P(detect_pole_order(pair)).P)
    rates = np.array(rates)
    print(f"{rates.size} models, T = {cfg.T}, {cfg.reps} seeds each")
    print(f"order concordance: worst {rates.min():.2f}, mean {rates.mean():.3f}, "
          f"models below 0.9: {int(np.sum(rates < 0.9))}")
    if proj:
        print(f"P_m y stationary: worst {min(proj):.2f}, mean {np.mean(proj):.3f}")
    print(f"cointegrated pair, P_1 y stationary: {pair_rate:.2f}")
    print(f"{time.perf_counter() - t0:.1f} s")
    return 0 if rates.min() >= 0.9 and pair_rate >= 0.9 else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=4000)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--models", type=int, default=25, help="seeds per (n, m) cell")
    ap.add_argument("--tops", default="1,2")
    ap.add_argument("--threshold", type=float, default=STATIONARY_SLOPE)
    ap.add_argument("--projector", action="store_true", help="also score P_m y per model")
    a = ap.parse_args(argv)
    tops = tuple(int(x) for x in a.tops.split(","))
    return run(SimConfig(tops=tops, models_per_cell=a.models, T=a.T, reps=a.reps,
                         threshold=a.threshold, with_projector=a.projector))


if __name__ == "__main__":
    raise SystemExit(main())
