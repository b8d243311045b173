"""Command-line front end: ``fatigue-bandit {run,compare,sweep,verify,oracle-check}``.

Exit codes: 0 success, 1 runtime or verification failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from fatigue_bandit import harness
from fatigue_bandit.harness import ConfigError, Dist, ExperimentConfig
from fatigue_bandit.oracle import DEFAULT_MAX_N
from fatigue_bandit.policies import POLICIES, SborsConfig, UcbVConfig
from fatigue_bandit.simulator import TEST_POLICIES

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# sweepable flag name -> how to apply one value to a config
_SWEEPABLE = {
    "u-max": lambda cfg, v: replace(cfg, pref_dist=Dist("uniform", 0.0, float(v))),
    "p": lambda cfg, v: replace(cfg, abandon_prob=float(v)),
    "cost": lambda cfg, v: replace(cfg, cost=float(v)),
    "n-items": lambda cfg, v: replace(cfg, n_items=int(v)),
    "horizon": lambda cfg, v: replace(cfg, horizon=int(v)),
    "alpha": lambda cfg, v: replace(cfg, sbors=replace(cfg.sbors, alpha=float(v))),
    "beta": lambda cfg, v: replace(cfg, sbors=replace(cfg.sbors, beta=float(v))),
    "R": lambda cfg, v: replace(cfg, sbors=replace(cfg.sbors, n_samples=int(v))),
    "b": lambda cfg, v: replace(cfg, ucbv=UcbVConfig(float(v))),
}


def _experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON experiment config; explicit flags override it")
    p.add_argument("--policy", action="append", choices=POLICIES + TEST_POLICIES,
                   help="policy to run (repeatable)")
    p.add_argument("--n-items", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--p", type=float, help="abandonment probability")
    p.add_argument("--cost", type=float)
    p.add_argument("--u-max", type=float, help="preferences drawn from U[0, u_max]")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--R", type=int, dest="R", help="SBORS correlated samples")
    p.add_argument("--b", type=float, help="UCB-V support bound")
    p.add_argument("--out", required=True, help="CSV output path; a .json sidecar is written next to it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fatigue-bandit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    _experiment_flags(sub.add_parser("run", help="run one or more policies"))
    _experiment_flags(sub.add_parser("compare", help="paired comparison on common random numbers"))
    sweep = sub.add_parser("sweep", help="repeat an experiment over a list of values of one flag")
    _experiment_flags(sweep)
    sweep.add_argument("--sweep", required=True, metavar="FLAG=V1,V2,...",
                       help=f"one of {sorted(_SWEEPABLE)}")

    verify = sub.add_parser("verify", help="lemma property checks")
    verify.add_argument("--trials", type=int, default=1_000_000, help="concentration trials per grid point")
    verify.add_argument("--instances", type=int, default=10_000, help="random pairs for the Lipschitz/monotonicity checks")
    verify.add_argument("--rounds", type=int, default=100_000, help="rounds for the unbiasedness check")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--mutant", action="store_true", help=argparse.SUPPRESS)

    oracle = sub.add_parser("oracle-check", help="closed-form oracle vs brute force")
    oracle.add_argument("--max-n", type=int, default=6)
    oracle.add_argument("--instances", type=int, default=200, help="random instances per size")
    oracle.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.policy:
        updates["policies"] = tuple(args.policy)
    for flag, field_name in (("n_items", "n_items"), ("horizon", "horizon"), ("reps", "replications"),
                             ("seed", "seed"), ("p", "abandon_prob"), ("cost", "cost")):
        value = getattr(args, flag)
        if value is not None:
            updates[field_name] = value
    if args.u_max is not None:
        updates["pref_dist"] = Dist("uniform", 0.0, args.u_max)
    sbors = {k: v for k, v in (("alpha", args.alpha), ("beta", args.beta), ("n_samples", args.R)) if v is not None}
    try:
        if sbors:
            updates["sbors"] = replace(cfg.sbors, **sbors)
        if args.b is not None:
            updates["ucbv"] = UcbVConfig(args.b)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    updates["output"] = args.out
    return replace(cfg, **updates).validate()


def _summarise(result: harness.AggregateResult, out=None):
    out = out or sys.stdout
    n_reps = next(iter(result.cumulative.values())).shape[0]
    for policy in result.policies:
        final = result.final(policy)
        out.write(
            f"{policy}: mean final cumulative regret {final.mean():.4f} "
            f"(median {np.median(final):.4f}, sd {result.std(policy)[-1]:.4f}, reps {n_reps}, "
            f"{result.wall_clock.get(policy, 0.0):.1f}s)\n"
        )


def _paired_ratios(result: harness.AggregateResult, out=None):
    out = out or sys.stdout
    base, *others = result.policies
    base_final = result.final(base)
    for other in others:
        final = result.final(other)
        ratio = final.mean() / base_final.mean() if base_final.mean() > 0 else float("inf")
        with np.errstate(divide="ignore", invalid="ignore"):
            paired = np.where(base_final > 0, final / base_final, np.inf)
        out.write(
            f"{other} / {base}: ratio of mean regrets {ratio:.3f}, "
            f"mean paired ratio {np.mean(paired):.3f}\n"
        )


def _sidecar(path: str) -> Path:
    return Path(path).with_suffix(".json")


def cmd_run(args, compare: bool = False) -> int:
    cfg = config_from_args(args)
    result = harness.run_experiment(cfg)
    harness.emit_csv(result, cfg.output)
    harness.emit_sidecar(_sidecar(cfg.output), cfg.to_json(), result)
    _summarise(result)
    if compare and len(result.policies) > 1:
        _paired_ratios(result)
    return EXIT_OK


def _parse_sweep(spec: str):
    name, sep, values = spec.partition("=")
    if not sep or name not in _SWEEPABLE:
        raise ConfigError(f"--sweep: expected FLAG=V1,V2,... with FLAG in {sorted(_SWEEPABLE)}, got {spec!r}")
    items = [v.strip() for v in values.split(",") if v.strip()]
    if not items:
        raise ConfigError("--sweep: no values given")
    return name, items


def cmd_sweep(args) -> int:
    base = config_from_args(args)
    name, values = _parse_sweep(args.sweep)
    scenarios = []
    for value in values:
        try:
            cfg = _SWEEPABLE[name](base, value).validate()
        except ValueError as exc:
            raise ConfigError(f"--sweep {name}={value}: {exc}") from None
        scenarios.append((f"{name}={value}", cfg))
    results = []
    for label, cfg in scenarios:
        result = harness.run_experiment(cfg)
        sys.stdout.write(f"[{label}]\n")
        _summarise(result)
        results.append((label, result))
    harness.emit_sweep_csv(results, base.output)
    harness.emit_sidecar(_sidecar(base.output), {"base": base.to_json(), "sweep": args.sweep})
    return EXIT_OK


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    utility = harness.mutant_utility if args.mutant else None
    reports = [
        harness.check_concentration(args.trials, 2.0, (5.0, 10.0, 50.0), rng),
        harness.check_lipschitz(args.instances, rng, utility=utility),
        harness.check_monotonicity(args.instances, rng, utility=utility),
        harness.check_unbiasedness(args.rounds, rng),
    ]
    for report in reports:
        print(report.summary())
    for report in reports:
        if not report.ok:
            print(f"first {report.name} counterexample: {json.dumps(report.counterexample)}")
            return EXIT_FAIL
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if not 1 <= args.max_n <= DEFAULT_MAX_N:
        raise ConfigError(f"--max-n: must lie in [1, {DEFAULT_MAX_N}], got {args.max_n}")
    if args.instances < 1:
        raise ConfigError("--instances: must be >= 1")
    report = harness.check_oracle(range(1, args.max_n + 1), args.instances, np.random.default_rng(args.seed))
    print(report.summary())
    if not report.ok:
        print(json.dumps(report.counterexample))
        return EXIT_FAIL
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "run": cmd_run,
        "compare": lambda a: cmd_run(a, compare=True),
        "sweep": cmd_sweep,
        "verify": cmd_verify,
        "oracle-check": cmd_oracle_check,
    }
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return handlers[args.command](args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
