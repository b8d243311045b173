"""User simulation and the online loop with exact pseudo-regret bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fatigue_bandit.model import (
    ABANDONED,
    EXHAUSTED,
    SELECTED,
    InteractionOutcome,
    ProblemInstance,
    _utility,
    check_sequence,
)
from fatigue_bandit.oracle import _order, brute_force_worst
from fatigue_bandit.policies import POLICIES, PolicySettings, PosteriorState, policy_arrays, update_posterior

# offer the true optimum / the true worst sequence every round; for tests
TEST_POLICIES = ("oracle", "worst")

__all__ = [
    "InteractionOutcome",
    "RegretTrace",
    "TEST_POLICIES",
    "pseudo_regret",
    "run_episode",
    "simulate_user",
    "simulate_users",
]


def _simulate(u, p, rewards, cost, seq, rng) -> InteractionOutcome:
    m = seq.size
    if m == 0:
        return InteractionOutcome(0, EXHAUSTED)
    draws = rng.random((m, 2))
    select = draws[:, 0] < u[seq]
    stop = select | (draws[:, 1] < p)
    k = int(stop.argmax())
    if not stop[k]:
        return InteractionOutcome(m, EXHAUSTED)
    if select[k]:
        item = int(seq[k])
        return InteractionOutcome(k + 1, SELECTED, item, float(rewards[item]))
    return InteractionOutcome(k + 1, ABANDONED, None, -cost)


def simulate_user(instance: ProblemInstance, seq, rng: np.random.Generator) -> InteractionOutcome:
    """Walk the sequence: select w.p. u, else abandon w.p. p, else move on.

    Each position consumes one pair of uniforms, so the geometric patience is
    realised implicitly by the per-position abandonment draws.
    """
    arr = check_sequence(seq, instance.n_items)
    return _simulate(
        instance.preferences, instance.abandon_prob, instance.rewards, instance.cost, arr, rng
    )


@dataclass
class OutcomeCounts:
    """Terminal-event tallies over many simulated users of one sequence.

    ``selected[k]`` and ``abandoned[k]`` count events at position ``k + 1``.
    """

    selected: np.ndarray
    abandoned: np.ndarray
    exhausted: int

    @property
    def total(self) -> int:
        return int(self.selected.sum() + self.abandoned.sum() + self.exhausted)


def simulate_users(instance: ProblemInstance, seq, rng: np.random.Generator, n_users: int,
                   chunk: int = 50_000) -> OutcomeCounts:
    """Tally ``n_users`` independent calls of ``simulate_user`` in bulk.

    Draws are laid out exactly as in successive ``simulate_user`` calls, so the
    tallies are identical to looping over them with the same generator.
    """
    arr = check_sequence(seq, instance.n_items)
    m = arr.size
    selected = np.zeros(m, dtype=np.int64)
    abandoned = np.zeros(m, dtype=np.int64)
    if m == 0:
        return OutcomeCounts(selected, abandoned, n_users)
    u = instance.preferences[arr]
    exhausted = 0
    done = 0
    while done < n_users:
        size = min(chunk, n_users - done)
        draws = rng.random((size, m, 2))
        select = draws[:, :, 0] < u
        stop = select | (draws[:, :, 1] < instance.abandon_prob)
        first = stop.argmax(axis=1)
        hit = stop[np.arange(size), first]
        sel = hit & select[np.arange(size), first]
        selected += np.bincount(first[sel], minlength=m)
        abandoned += np.bincount(first[hit & ~sel], minlength=m)
        exhausted += int((~hit).sum())
        done += size
    return OutcomeCounts(selected, abandoned, exhausted)


def pseudo_regret(instance: ProblemInstance, seq, optimum=None) -> float:
    """E[U(S*)] - E[U(seq)] under the true parameters."""
    arr = check_sequence(seq, instance.n_items)
    u, q, r, c = instance.preferences, instance.continue_prob, instance.rewards, instance.cost
    if optimum is None:
        optimum = _order(u, q, r, c)
    return _utility(u, q, r, c, np.asarray(optimum, dtype=np.int64)) - _utility(u, q, r, c, arr)


@dataclass
class RegretTrace:
    per_round: np.ndarray
    offered_lengths: np.ndarray
    realized: np.ndarray
    optimal_utility: float

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.per_round)

    @property
    def horizon(self) -> int:
        return int(self.per_round.size)


def _rngs(seed, policy_rng, user_rng):
    if policy_rng is None or user_rng is None:
        if seed is None:
            raise ValueError("pass either seed or both policy_rng and user_rng")
        ss_policy, ss_user = np.random.SeedSequence(seed).spawn(2)
        policy_rng = policy_rng or np.random.default_rng(ss_policy)
        user_rng = user_rng or np.random.default_rng(ss_user)
    return policy_rng, user_rng


def run_episode(
    instance: ProblemInstance,
    policy: str,
    horizon: int,
    seed=None,
    *,
    settings: PolicySettings | None = None,
    policy_rng: np.random.Generator | None = None,
    user_rng: np.random.Generator | None = None,
) -> RegretTrace:
    """Run one policy for ``horizon`` rounds against ``instance``.

    Policy randomness and user randomness come from separate streams so that
    several policies can share the user stream of a replication.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if policy not in POLICIES and policy not in TEST_POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    settings = settings or PolicySettings()
    policy_rng, user_rng = _rngs(seed, policy_rng, user_rng)

    u, q, p = instance.preferences, instance.continue_prob, instance.abandon_prob
    r, c = instance.rewards, instance.cost
    best = _order(u, q, r, c)
    best_value = _utility(u, q, r, c, best)
    fixed = None
    if policy == "oracle":
        fixed = best
    elif policy == "worst":
        worst, _ = brute_force_worst(instance.params, r, c)
        fixed = np.asarray(worst, dtype=np.int64)

    state = PosteriorState.initial(instance.n_items)
    per_round = np.empty(horizon)
    lengths = np.empty(horizon, dtype=np.int64)
    realized = np.empty(horizon)
    gap_cache: dict[bytes, float] = {}

    for t in range(1, horizon + 1):
        if fixed is None:
            su, sq = policy_arrays(policy, state, t, policy_rng, settings)
            seq = _order(su, sq, r, c)
        else:
            seq = fixed
        key = seq.tobytes()
        gap = gap_cache.get(key)
        if gap is None:
            gap = best_value - _utility(u, q, r, c, seq)
            gap_cache[key] = gap
        outcome = _simulate(u, p, r, c, seq, user_rng)
        update_posterior(state, seq, outcome)
        per_round[t - 1] = gap
        lengths[t - 1] = seq.size
        realized[t - 1] = outcome.realized_utility
    return RegretTrace(per_round, lengths, realized, best_value)
