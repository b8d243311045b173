"""Per-round sequence optimisation.

``optimal_sequence`` ranks items by their score
``theta_i = (r_i u_i - c p (1 - u_i)) / (1 - q (1 - u_i))`` and keeps those with a
positive margin ``r_i u_i - c p (1 - u_i)``. ``brute_force_optimal`` enumerates
every ordered subset and is kept independent of it so it can serve as a check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fatigue_bandit.model import ParamVector, Sequence

DEFAULT_MAX_N = 7


class DegenerateInstanceError(ValueError):
    """Raised when some score denominator 1 - q(1 - u_i) is not positive."""


@dataclass(frozen=True)
class ScoredItem:
    item: int
    score: float
    margin: float


def _order(u: np.ndarray, q: float, rewards: np.ndarray, cost: float) -> np.ndarray:
    margin = rewards * u - cost * (1.0 - q) * (1.0 - u)
    denom = 1.0 - q * (1.0 - u)
    if denom.min() <= 0.0:
        bad = int(np.flatnonzero(denom <= 0.0)[0])
        raise DegenerateInstanceError(
            f"item {bad} has score denominator {denom[bad]!r} (q={q!r}, u={u[bad]!r})"
        )
    keep = np.flatnonzero(margin > 0.0)
    if keep.size == 0:
        return keep
    theta = margin[keep] / denom[keep]
    # stable sort on -theta keeps ascending item index among ties
    return keep[np.argsort(-theta, kind="stable")]


def scores(params: ParamVector, rewards, cost: float) -> list[ScoredItem]:
    u, q = params.preferences, params.continue_prob
    rewards = np.asarray(rewards, dtype=float)
    margin = rewards * u - cost * (1.0 - q) * (1.0 - u)
    denom = 1.0 - q * (1.0 - u)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = margin / denom
    return [ScoredItem(i, float(theta[i]), float(margin[i])) for i in range(u.size)]


def optimal_sequence(params: ParamVector, rewards, cost: float) -> Sequence:
    """Expected-utility maximising sequence, sorted by score, ties by item index."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.shape != params.preferences.shape:
        raise ValueError("rewards and preferences differ in length")
    order = _order(params.preferences, params.continue_prob, rewards, float(cost))
    return tuple(order.tolist())


def _enumerate(u, q, rewards, cost, visit):
    """Depth-first walk over all ordered subsets of distinct items.

    ``visit(seq, value)`` sees every sequence (the empty one included) with its
    expected utility, accumulated position by position from the outcome tree.
    """
    n = len(u)
    p = 1.0 - q
    used = [False] * n
    path: list[int] = []

    def walk(reach: float, value: float):
        visit(path, value)
        for i in range(n):
            if used[i]:
                continue
            miss = reach * (1.0 - u[i])
            step = value + reach * u[i] * rewards[i] - cost * miss * p
            used[i] = True
            path.append(i)
            walk(miss * q, step)
            path.pop()
            used[i] = False

    walk(1.0, 0.0)


def _check_size(n: int, max_n: int):
    if n > max_n:
        raise ValueError(f"brute force refuses N={n} > max_n={max_n}")


def brute_force_optimal(
    params: ParamVector, rewards, cost: float, max_n: int = DEFAULT_MAX_N
) -> tuple[Sequence, float]:
    _check_size(params.n_items, max_n)
    best: list = [(), 0.0]

    def visit(seq, value):
        if value > best[1]:
            best[0], best[1] = tuple(seq), value

    _enumerate(
        params.preferences.tolist(), params.continue_prob,
        np.asarray(rewards, dtype=float).tolist(), float(cost), visit,
    )
    return best[0], float(best[1])


def brute_force_worst(
    params: ParamVector, rewards, cost: float, max_n: int = DEFAULT_MAX_N
) -> tuple[Sequence, float]:
    """Utility-minimising sequence; used to build adversarial test policies."""
    _check_size(params.n_items, max_n)
    worst: list = [(), 0.0]

    def visit(seq, value):
        if value < worst[1]:
            worst[0], worst[1] = tuple(seq), value

    _enumerate(
        params.preferences.tolist(), params.continue_prob,
        np.asarray(rewards, dtype=float).tolist(), float(cost), visit,
    )
    return worst[0], float(worst[1])
