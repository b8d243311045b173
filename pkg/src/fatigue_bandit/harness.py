"""Replicated experiments, aggregation, CSV output and the lemma checks."""

from __future__ import annotations

import csv
import json
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from fatigue_bandit import __version__
from fatigue_bandit.model import ProblemInstance, _utility, reach_probs
from fatigue_bandit.oracle import _order
from fatigue_bandit.policies import (
    POLICIES,
    PolicySettings,
    PosteriorState,
    SborsConfig,
    UcbVConfig,
    unbiased_estimates,
    update_posterior,
)
from fatigue_bandit.simulator import TEST_POLICIES, _simulate, run_episode

CSV_COLUMNS = ("policy", "replication", "round", "cumulative_regret", "mean_offered_length", "seed")
WORKERS_ENV = "FATIGUE_BANDIT_WORKERS"

# stable per-policy stream ids, independent of the order policies are listed in
_POLICY_CODES = {name: i for i, name in enumerate(POLICIES + TEST_POLICIES)}
_INSTANCE_STREAM = 101
_USER_STREAM = 102


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass(frozen=True)
class Dist:
    """Either ``uniform`` on [low, high] or an ``explicit`` vector of values."""

    kind: str = "uniform"
    low: float = 0.0
    high: float = 1.0
    values: tuple[float, ...] = ()

    def validate(self, name: str, n_items: int):
        if self.kind == "uniform":
            if not 0.0 <= self.low <= self.high <= 1.0:
                raise ConfigError(f"{name}: need 0 <= low <= high <= 1, got [{self.low}, {self.high}]")
        elif self.kind == "explicit":
            if len(self.values) != n_items:
                raise ConfigError(f"{name}: explicit vector has {len(self.values)} values, n_items={n_items}")
            if any(not 0.0 <= v <= 1.0 for v in self.values):
                raise ConfigError(f"{name}: explicit values must lie in [0, 1]")
        else:
            raise ConfigError(f"{name}: kind must be 'uniform' or 'explicit', got {self.kind!r}")

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "explicit":
            return np.asarray(self.values, dtype=float)
        return rng.uniform(self.low, self.high, n)

    @classmethod
    def from_json(cls, name: str, obj) -> Dist:
        if isinstance(obj, list):
            return cls("explicit", values=tuple(float(v) for v in obj))
        if not isinstance(obj, dict):
            raise ConfigError(f"{name}: expected an object or a list")
        unknown = set(obj) - {"kind", "low", "high", "values"}
        if unknown:
            raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
        try:
            values = tuple(float(v) for v in obj.get("values", ()))
            return cls(obj.get("kind", "uniform"), float(obj.get("low", 0.0)), float(obj.get("high", 1.0)), values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    n_items: int = 30
    horizon: int = 100_000
    replications: int = 10
    seed: int = 0
    policies: tuple[str, ...] = ("beta-ts",)
    reward_dist: Dist = Dist("uniform", 0.0, 1.0)
    pref_dist: Dist = Dist("uniform", 0.0, 0.1)
    abandon_prob: float = 0.1
    cost: float = 0.5
    sbors: SborsConfig = field(default_factory=SborsConfig)
    ucbv: UcbVConfig = field(default_factory=UcbVConfig)
    output: str | None = None

    def validate(self) -> ExperimentConfig:
        for name, lo in (("n_items", 1), ("horizon", 1), ("replications", 1)):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < lo:
                raise ConfigError(f"{name}: must be an integer >= {lo}, got {value!r}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError(f"seed: must be a non-negative integer, got {self.seed!r}")
        if not self.policies:
            raise ConfigError("policies: at least one policy is required")
        for p in self.policies:
            if p not in _POLICY_CODES:
                raise ConfigError(f"policies: unknown policy {p!r}; expected one of {POLICIES}")
        if len(set(self.policies)) != len(self.policies):
            raise ConfigError("policies: duplicate entries")
        for name in ("abandon_prob", "cost"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name}: must lie in [0, 1], got {value}")
        self.reward_dist.validate("reward_dist", self.n_items)
        self.pref_dist.validate("pref_dist", self.n_items)
        if "worst" in self.policies and self.n_items > 7:
            raise ConfigError("policies: 'worst' needs brute force and n_items <= 7")
        return self

    @property
    def settings(self) -> PolicySettings:
        return PolicySettings(self.sbors, self.ucbv)

    def to_json(self) -> dict:
        out = asdict(self)
        out["policies"] = list(self.policies)
        for key in ("reward_dist", "pref_dist"):
            d = getattr(self, key)
            out[key] = {"kind": d.kind, "values": list(d.values)} if d.kind == "explicit" else {
                "kind": d.kind, "low": d.low, "high": d.high}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> ExperimentConfig:
        if not isinstance(obj, dict):
            raise ConfigError("config: top level must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"config: unknown keys {sorted(unknown)}")
        kw = dict(obj)
        if "policies" in kw:
            kw["policies"] = tuple(kw["policies"])
        for key in ("reward_dist", "pref_dist"):
            if key in kw:
                kw[key] = Dist.from_json(key, kw[key])
        try:
            if "sbors" in kw:
                kw["sbors"] = _sub_config(SborsConfig, "sbors", kw["sbors"])
            if "ucbv" in kw:
                kw["ucbv"] = _sub_config(UcbVConfig, "ucbv", kw["ucbv"])
            for key in ("abandon_prob", "cost"):
                if key in kw:
                    kw[key] = float(kw[key])
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None
        return cls(**kw).validate()

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: {path} is not valid JSON: {exc}") from None
        return cls.from_json(obj)


def _sub_config(kind, name, obj):
    if not isinstance(obj, dict):
        raise ConfigError(f"{name}: expected an object")
    unknown = set(obj) - set(kind.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
    try:
        return kind(**obj)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def derive_seed(master: int, replication: int, stream: int) -> int:
    """64-bit seed for one (replication, stream) pair of a master seed."""
    ss = np.random.SeedSequence([master, replication, stream])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def policy_seed(master: int, replication: int, policy: str) -> int:
    return derive_seed(master, replication, _POLICY_CODES[policy])


def sample_instance(cfg: ExperimentConfig, replication: int) -> ProblemInstance:
    rng = np.random.default_rng(derive_seed(cfg.seed, replication, _INSTANCE_STREAM))
    rewards = cfg.reward_dist.draw(cfg.n_items, rng)
    prefs = cfg.pref_dist.draw(cfg.n_items, rng)
    return ProblemInstance(rewards, prefs, cfg.abandon_prob, cfg.cost)


def checkpoint_grid(horizon: int, n_points: int = 100) -> np.ndarray:
    """Log-spaced rounds in [1, horizon], always ending at ``horizon``."""
    grid = np.unique(np.round(np.logspace(0.0, math.log10(horizon), n_points)).astype(np.int64))
    grid = grid[(grid >= 1) & (grid <= horizon)]
    return np.union1d(grid, [horizon])


@dataclass
class AggregateResult:
    """Per-policy regret at checkpoints; arrays are (replications, checkpoints)."""

    checkpoints: np.ndarray
    cumulative: dict[str, np.ndarray]
    mean_lengths: dict[str, np.ndarray]
    seeds: dict[str, list[int]]
    wall_clock: dict[str, float] = field(default_factory=dict)
    traces: dict[str, list] | None = None

    @property
    def policies(self) -> list[str]:
        return list(self.cumulative)

    def mean(self, policy: str) -> np.ndarray:
        return self.cumulative[policy].mean(axis=0)

    def median(self, policy: str) -> np.ndarray:
        return np.median(self.cumulative[policy], axis=0)

    def std(self, policy: str) -> np.ndarray:
        reg = self.cumulative[policy]
        return reg.std(axis=0, ddof=1) if reg.shape[0] > 1 else np.zeros(reg.shape[1])

    def final(self, policy: str) -> np.ndarray:
        """Cumulative regret at the horizon, one value per replication."""
        return self.cumulative[policy][:, -1]


def _episode_job(args):
    cfg, replication, policy, keep_trace = args
    instance = sample_instance(cfg, replication)
    policy_rng = np.random.default_rng(policy_seed(cfg.seed, replication, policy))
    # common random numbers: every policy sees the same user stream per replication
    user_rng = np.random.default_rng(derive_seed(cfg.seed, replication, _USER_STREAM))
    start = time.perf_counter()
    trace = run_episode(
        instance, policy, cfg.horizon,
        settings=cfg.settings, policy_rng=policy_rng, user_rng=user_rng,
    )
    elapsed = time.perf_counter() - start
    grid = checkpoint_grid(cfg.horizon)
    cum = trace.cumulative[grid - 1]
    lengths = np.cumsum(trace.offered_lengths)[grid - 1] / grid
    return replication, policy, cum, lengths, elapsed, trace if keep_trace else None


def worker_count(default: int | None = None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV}: expected an integer, got {env!r}") from None
        return max(1, n)
    return default or os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig, workers: int | None = None, keep_traces: bool = False) -> AggregateResult:
    """Run every (policy, replication) episode and reduce to checkpoint statistics.

    Replication ``r`` draws a fresh instance from the configured distributions;
    all policies share that instance and its user stream.
    """
    cfg.validate()
    workers = worker_count(workers)
    jobs = [(cfg, r, p, keep_traces) for p in cfg.policies for r in range(cfg.replications)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_episode_job, jobs))
    else:
        results = [_episode_job(job) for job in jobs]

    grid = checkpoint_grid(cfg.horizon)
    shape = (cfg.replications, grid.size)
    cumulative = {p: np.empty(shape) for p in cfg.policies}
    lengths = {p: np.empty(shape) for p in cfg.policies}
    wall = {p: 0.0 for p in cfg.policies}
    traces = {p: [None] * cfg.replications for p in cfg.policies} if keep_traces else None
    for rep, policy, cum, lens, elapsed, trace in results:
        cumulative[policy][rep] = cum
        lengths[policy][rep] = lens
        wall[policy] += elapsed
        if traces is not None:
            traces[policy][rep] = trace
    seeds = {p: [policy_seed(cfg.seed, r, p) for r in range(cfg.replications)] for p in cfg.policies}
    return AggregateResult(grid, cumulative, lengths, seeds, wall, traces)


def _rows(result: AggregateResult):
    for policy in result.policies:
        for rep in range(result.cumulative[policy].shape[0]):
            seed = result.seeds[policy][rep]
            for j, rnd in enumerate(result.checkpoints):
                yield [
                    policy, rep, int(rnd),
                    repr(float(result.cumulative[policy][rep, j])),
                    repr(float(result.mean_lengths[policy][rep, j])),
                    seed,
                ]


def emit_csv(result: AggregateResult, path, extra: dict[str, str] | None = None):
    """Write one row per (policy, replication, checkpoint).

    ``extra`` prepends constant columns (the sweep's scenario label).
    """
    extra = extra or {}
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(extra) + list(CSV_COLUMNS))
            for row in _rows(result):
                writer.writerow(list(extra.values()) + row)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV {path}: {exc.strerror}") from None


def emit_sweep_csv(results: list[tuple[str, AggregateResult]], path):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["scenario", *CSV_COLUMNS])
            for label, result in results:
                for row in _rows(result):
                    writer.writerow([label, *row])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV {path}: {exc.strerror}") from None


def read_csv(path) -> AggregateResult:
    """Parse a file written by ``emit_csv`` back into checkpoint arrays."""
    rows: dict[str, dict[int, list]] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.setdefault(rec["policy"], {}).setdefault(int(rec["replication"]), []).append(rec)
    checkpoints = np.array([], dtype=np.int64)
    cumulative, lengths, seeds = {}, {}, {}
    for policy, reps in rows.items():
        order = sorted(reps)
        checkpoints = np.array([int(r["round"]) for r in reps[order[0]]], dtype=np.int64)
        cumulative[policy] = np.array([[float(r["cumulative_regret"]) for r in reps[k]] for k in order])
        lengths[policy] = np.array([[float(r["mean_offered_length"]) for r in reps[k]] for k in order])
        seeds[policy] = [int(reps[k][0]["seed"]) for k in order]
    return AggregateResult(checkpoints, cumulative, lengths, seeds)


def build_stamp() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def emit_sidecar(path, config: dict, result: AggregateResult | None = None):
    doc = {"config": config, "build": build_stamp()}
    if result is not None:
        doc["summary"] = {
            p: {"mean_final_regret": float(result.mean(p)[-1]), "median_final_regret": float(result.median(p)[-1])}
            for p in result.policies
        }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# lemma checks


@dataclass
class ViolationReport:
    name: str
    checked: int = 0
    violations: int = 0
    counterexample: dict | None = None
    details: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def record(self, example: dict):
        self.violations += 1
        if self.counterexample is None:
            self.counterexample = example

    def summary(self) -> str:
        status = "ok" if self.ok else "FAIL"
        return f"{self.name}: {status} ({self.violations} violations in {self.checked} checks)"


def concentration_radius(u_hat, n, alpha, beta, rho):
    log_rho = math.log(rho)
    return np.sqrt(alpha * u_hat * (1.0 - u_hat) * log_rho / (n + 1)) + np.sqrt(beta * log_rho / n)


def check_concentration(
    trials: int,
    beta: float = 2.0,
    rho_grid=(5.0, 10.0, 50.0),
    rng: np.random.Generator | None = None,
    *,
    alpha: float = 1.0,
    means=(0.0, 0.05, 0.5, 0.9),
    sample_sizes=(10, 100, 1000),
    slack: float = 2.0,
) -> ViolationReport:
    """Empirical tail rate of |mean - u| beyond the concentration radius vs 2 / rho^(2 beta).

    Each trial is a Bernoulli(u) stream of ``n`` observations; one grid point
    (u, n, rho) is a violation when its empirical rate exceeds ``slack`` times
    the bound. The same check covers the continuation estimate, which is also a
    Bernoulli mean.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    report = ViolationReport("concentration")
    for u in means:
        for n in sample_sizes:
            u_hat = rng.binomial(n, u, size=trials) / n
            for rho in rho_grid:
                radius = concentration_radius(u_hat, n, alpha, beta, rho)
                rate = float(np.mean(np.abs(u_hat - u) >= radius))
                bound = 2.0 / rho ** (2.0 * beta)
                point = {"u": u, "n": n, "rho": rho, "beta": beta, "rate": rate, "bound": bound}
                report.details.append(point)
                report.checked += 1
                if rate > slack * bound:
                    report.record(point)
    return report


def _random_pair(n, rng, dominated: bool):
    v = rng.uniform(0.0, 1.0, n)
    qv = rng.uniform(0.0, 1.0)
    if dominated:
        w = v + (1.0 - v) * rng.uniform(0.0, 1.0, n) * (rng.uniform(size=n) < 0.5)
        qw = qv + (1.0 - qv) * rng.uniform(0.0, 1.0)
    else:
        spread = rng.choice([1e-3, 1e-2, 0.1, 1.0])
        w = np.clip(v + spread * rng.uniform(-1.0, 1.0, n), 0.0, 1.0)
        qw = float(np.clip(qv + spread * rng.uniform(-1.0, 1.0), 0.0, 1.0))
    return v, qv, w, qw


def check_lipschitz(
    instances: int = 10_000, rng=None, *, n_items: int = 8, tol: float = 1e-9, utility=None
) -> ViolationReport:
    """|E[U(S*_v; v)] - E[U(S*_v; w)]| <= sum_{i in S*_v} (2|v_i - w_i| + (N + 1)|q_v - q_w|)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    utility = utility or _utility
    report = ViolationReport("lipschitz")
    for _ in range(instances):
        r = rng.uniform(0.0, 1.0, n_items)
        c = rng.uniform(0.0, 1.0)
        v, qv, w, qw = _random_pair(n_items, rng, dominated=False)
        best = _order(v, qv, r, c)
        lhs = abs(utility(v, qv, r, c, best) - utility(w, qw, r, c, best))
        rhs = float(np.sum(2.0 * np.abs(v[best] - w[best]) + (n_items + 1) * abs(qv - qw)))
        report.checked += 1
        if lhs > rhs + tol:
            report.record({"v": v.tolist(), "q_v": qv, "w": w.tolist(), "q_w": qw,
                           "rewards": r.tolist(), "cost": c, "lhs": lhs, "rhs": rhs})
    return report


def check_monotonicity(
    instances: int = 10_000, rng=None, *, n_items: int = 8, tol: float = 1e-9, utility=None
) -> ViolationReport:
    """E[U(S*_v; w, q_w)] >= E[U(S*_v; v, q_v)] whenever w >= v and q_w >= q_v."""
    rng = rng if rng is not None else np.random.default_rng(0)
    utility = utility or _utility
    report = ViolationReport("monotonicity")
    for _ in range(instances):
        r = rng.uniform(0.0, 1.0, n_items)
        c = rng.uniform(0.0, 1.0)
        v, qv, w, qw = _random_pair(n_items, rng, dominated=True)
        best = _order(v, qv, r, c)
        low = utility(v, qv, r, c, best)
        high = utility(w, qw, r, c, best)
        report.checked += 1
        if high < low - tol:
            report.record({"v": v.tolist(), "q_v": qv, "w": w.tolist(), "q_w": qw,
                           "rewards": r.tolist(), "cost": c, "low": low, "high": high})
    return report


def check_unbiasedness(rounds: int = 100_000, rng=None, *, z: float = 3.0) -> ViolationReport:
    """Offer a fixed sequence against fixed truth; estimates must land within z standard errors."""
    rng = rng if rng is not None else np.random.default_rng(0)
    report = ViolationReport("unbiasedness")
    u = np.array([0.3, 0.1, 0.5, 0.05, 0.2])
    p = 0.2
    seq = np.arange(u.size)
    rewards = np.ones(u.size)
    state = PosteriorState.initial(u.size)
    for _ in range(rounds):
        update_posterior(state, seq, _simulate(u, p, rewards, 0.5, seq, rng))
    u_hat, q_hat = unbiased_estimates(state)
    targets = [(f"u[{i}]", u[i], u_hat[i], state.trials[i]) for i in range(u.size)]
    targets.append(("q", 1.0 - p, q_hat, state.q_trials))
    for name, truth, est, n in targets:
        se = math.sqrt(max(est * (1.0 - est), 1e-12) / n)
        point = {"param": name, "truth": float(truth), "estimate": float(est), "n": int(n), "se": se}
        report.details.append(point)
        report.checked += 1
        if abs(est - truth) > z * se:
            report.record(point)
    return report


def mutant_utility(u, q, rewards, cost, seq) -> float:
    """Deliberately wrong utility with the abandonment penalty's sign flipped."""
    if seq.size == 0:
        return 0.0
    reach = reach_probs(u, q, seq)
    us = u[seq]
    return float(np.dot(reach * us, rewards[seq]) + cost * (1.0 - q) * np.dot(reach, 1.0 - us))


def random_oracle_instance(n: int, rng: np.random.Generator) -> dict:
    return {
        "preferences": rng.uniform(0.0, 1.0, n).tolist(),
        "rewards": rng.uniform(0.0, 1.0, n).tolist(),
        "abandon_prob": float(rng.uniform(0.0, 0.5)),
        "cost": float(rng.uniform(0.0, 1.0)),
    }


def check_oracle(
    sizes, instances: int = 200, rng=None, *, tol: float = 1e-9, max_n: int = 7
) -> ViolationReport:
    """Closed-form optimal sequence vs exhaustive search, compared by utility."""
    from fatigue_bandit.model import ParamVector, expected_utility
    from fatigue_bandit.oracle import brute_force_optimal, optimal_sequence

    rng = rng if rng is not None else np.random.default_rng(0)
    report = ViolationReport("oracle")
    for n in sizes:
        for _ in range(instances):
            inst = random_oracle_instance(n, rng)
            params = ParamVector(inst["preferences"], 1.0 - inst["abandon_prob"])
            seq = optimal_sequence(params, inst["rewards"], inst["cost"])
            closed = expected_utility(params, inst["rewards"], inst["cost"], seq)
            _, brute = brute_force_optimal(params, inst["rewards"], inst["cost"], max_n=max_n)
            report.checked += 1
            if abs(closed - brute) > tol:
                report.record({**inst, "closed_form_sequence": list(seq),
                               "closed_form_utility": closed, "brute_force_utility": brute})
    return report


def check_model_fidelity(
    pairs: int = 20, draws: int = 1_000_000, rng=None, *, z: float = 4.0, max_n: int = 8
) -> ViolationReport:
    """Simulated outcome frequencies vs closed-form probabilities, within ``z`` standard errors.

    Categories per (instance, sequence): selection of each offered item, total
    abandonment, and exhaustion.
    """
    from fatigue_bandit.model import abandonment_prob, exhaust_prob, selection_prob
    from fatigue_bandit.simulator import simulate_users

    rng = rng if rng is not None else np.random.default_rng(0)
    report = ViolationReport("fidelity")
    for _ in range(pairs):
        n = int(rng.integers(1, max_n + 1))
        inst = ProblemInstance(rng.uniform(size=n), rng.uniform(size=n), rng.uniform(0.0, 0.5), 0.5)
        seq = tuple(rng.permutation(n)[: int(rng.integers(1, n + 1))].tolist())
        counts = simulate_users(inst, seq, rng, draws)
        cells = [(f"select {i}", selection_prob(inst, seq, i), counts.selected[k]) for k, i in enumerate(seq)]
        cells.append(("abandon", abandonment_prob(inst, seq), counts.abandoned.sum()))
        cells.append(("exhaust", exhaust_prob(inst, seq), counts.exhausted))
        for name, prob, hits in cells:
            freq = hits / draws
            se = math.sqrt(max(prob * (1.0 - prob), 1e-300) / draws)
            report.checked += 1
            if abs(freq - prob) > z * se:
                report.record({"sequence": list(seq), "preferences": inst.preferences.tolist(),
                               "abandon_prob": inst.abandon_prob, "cell": name,
                               "expected": prob, "observed": freq})
    return report
