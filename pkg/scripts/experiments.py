"""Regret experiments for the three figure settings, printed as summary tables.

    python scripts/experiments.py fig1 [--horizon 100000] [--reps 10]
    python scripts/experiments.py fig2 [--horizon 50000] [--reps 5]
    python scripts/experiments.py fig3 [--horizon 50000] [--reps 10]
"""

import argparse
import warnings
from dataclasses import replace

import numpy as np

from fatigue_bandit.harness import Dist, ExperimentConfig, run_experiment
from fatigue_bandit.policies import SborsConfig

BASE = ExperimentConfig(n_items=30, abandon_prob=0.1, cost=0.5)
U_MAX = (0.1, 0.2, 0.3, 0.5)


def report(label, cfg):
    res = run_experiment(cfg)
    for p in res.policies:
        final = res.final(p)
        se = final.std(ddof=1) / np.sqrt(final.size) if final.size > 1 else 0.0
        print(f"{label:>24} {p:>8}  mean {final.mean():9.2f}  se {se:7.2f}  "
              f"min {final.min():9.2f}  max {final.max():9.2f}  ({res.wall_clock[p]:.0f}s)", flush=True)
    return res


def fig1(horizon, reps, seed):
    for u_max in U_MAX:
        cfg = replace(BASE, horizon=horizon, replications=reps, seed=seed,
                      policies=("beta-ts",), pref_dist=Dist("uniform", 0.0, u_max))
        report(f"u_max={u_max}", cfg)


def fig2(horizon, reps, seed):
    warnings.simplefilter("ignore")
    base = replace(BASE, horizon=horizon, replications=reps, seed=seed, policies=("sbors",))
    for u_max in U_MAX:
        report(f"u_max={u_max}", replace(base, pref_dist=Dist("uniform", 0.0, u_max)))
    for R in (1, 10, 100):
        report(f"R={R}", replace(base, sbors=SborsConfig(1.0, 2.0, R)))
    for alpha in (0.1, 1.0, 10.0):
        report(f"alpha={alpha}", replace(base, sbors=SborsConfig(alpha, 2.0, 10)))
    for beta in (0.2, 2.0, 20.0):
        report(f"beta={beta}", replace(base, sbors=SborsConfig(1.0, beta, 10)))


def fig3(horizon, reps, seed):
    cfg = replace(BASE, horizon=horizon, replications=reps, seed=seed,
                  policies=("beta-ts", "ucb", "ucb-v"), pref_dist=Dist("uniform", 0.0, 1.0))
    res = report("u_max=1.0", cfg)
    ts = res.final("beta-ts").mean()
    for p in ("ucb", "ucb-v"):
        print(f"{p} / beta-ts regret ratio: {res.final(p).mean() / ts:.2f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("figure", choices=("fig1", "fig2", "fig3"))
    ap.add_argument("--horizon", type=int)
    ap.add_argument("--reps", type=int)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    defaults = {"fig1": (100_000, 10), "fig2": (50_000, 5), "fig3": (50_000, 10)}[a.figure]
    horizon = a.horizon or defaults[0]
    reps = a.reps or defaults[1]
    {"fig1": fig1, "fig2": fig2, "fig3": fig3}[a.figure](horizon, reps, a.seed)
