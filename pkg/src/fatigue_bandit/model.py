"""User behaviour model: selection, abandonment and expected utility of a sequence.

A user scans the offered items top to bottom. At each position they select the
item with probability ``u_i``; otherwise they abandon with probability ``p``
(paying the platform a penalty ``c``) or move on with probability ``q = 1 - p``.
Running past the last item ends the session with zero utility.

Sequences are plain tuples (or 1-d integer arrays) of distinct item indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Sequence = tuple[int, ...]


def _unit_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def _unit_scalar(value, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class ProblemInstance:
    """Ground-truth environment: rewards, preferences, abandonment probability and cost."""

    rewards: np.ndarray
    preferences: np.ndarray
    abandon_prob: float
    cost: float
    continue_prob: float = field(init=False)

    def __post_init__(self):
        rewards = _unit_array(self.rewards, "rewards")
        prefs = _unit_array(self.preferences, "preferences")
        if rewards.shape != prefs.shape:
            raise ValueError(
                f"rewards and preferences differ in length ({rewards.size} vs {prefs.size})"
            )
        if rewards.size == 0:
            raise ValueError("an instance needs at least one item")
        rewards.setflags(write=False)
        prefs.setflags(write=False)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "preferences", prefs)
        p = _unit_scalar(self.abandon_prob, "abandon_prob")
        object.__setattr__(self, "abandon_prob", p)
        object.__setattr__(self, "cost", _unit_scalar(self.cost, "cost"))
        object.__setattr__(self, "continue_prob", 1.0 - p)

    @property
    def n_items(self) -> int:
        return int(self.rewards.size)

    @property
    def params(self) -> ParamVector:
        return ParamVector(self.preferences, self.continue_prob)


@dataclass(frozen=True)
class ParamVector:
    """Preference vector and continuation probability, true or estimated.

    Values are clamped into [0, 1] at construction; sampled or optimistic
    estimates routinely leave the unit interval.
    """

    preferences: np.ndarray
    continue_prob: float

    def __post_init__(self):
        prefs = np.asarray(self.preferences, dtype=float)
        if prefs.ndim != 1:
            raise ValueError(f"preferences must be a 1-d vector, got shape {prefs.shape}")
        if not (np.all(np.isfinite(prefs)) and np.isfinite(self.continue_prob)):
            raise ValueError("parameters must be finite")
        prefs = np.clip(prefs, 0.0, 1.0)
        prefs.setflags(write=False)
        object.__setattr__(self, "preferences", prefs)
        object.__setattr__(self, "continue_prob", min(max(float(self.continue_prob), 0.0), 1.0))

    @property
    def n_items(self) -> int:
        return int(self.preferences.size)

    @property
    def abandon_prob(self) -> float:
        return 1.0 - self.continue_prob


def check_sequence(seq, n_items: int) -> np.ndarray:
    """Validate ``seq`` against ``n_items`` and return it as an int array."""
    arr = np.asarray(seq, dtype=np.int64).reshape(-1)
    if arr.size > n_items:
        raise ValueError(f"sequence of length {arr.size} exceeds n_items={n_items}")
    if arr.size and (arr.min() < 0 or arr.max() >= n_items):
        raise ValueError(f"sequence {tuple(arr.tolist())} has indices outside [0, {n_items})")
    if np.unique(arr).size != arr.size:
        raise ValueError(f"sequence {tuple(arr.tolist())} repeats an item")
    return arr


def _as_params(params) -> ParamVector:
    if isinstance(params, ProblemInstance):
        return params.params
    return params


def reach_probs(u: np.ndarray, q: float, seq: np.ndarray) -> np.ndarray:
    """Probability that the user views each position of ``seq``: q^(l-1) prod_{k<l}(1-u)."""
    stay = q * (1.0 - u[seq])
    reach = np.empty(seq.size)
    if seq.size:
        reach[0] = 1.0
        np.cumprod(stay[:-1], out=reach[1:])
    return reach


def _utility(u, q, rewards, cost, seq) -> float:
    # hot path for the simulator: no validation
    if seq.size == 0:
        return 0.0
    us = u[seq]
    reach = reach_probs(u, q, seq)
    gain = np.dot(reach * us, rewards[seq])
    lost = (1.0 - q) * np.dot(reach, 1.0 - us)
    return float(gain - cost * lost)


def selection_prob(params, seq, item: int) -> float:
    params = _as_params(params)
    n = params.n_items
    if not 0 <= item < n:
        raise ValueError(f"item {item} outside [0, {n})")
    arr = check_sequence(seq, n)
    hits = np.flatnonzero(arr == item)
    if hits.size == 0:
        return 0.0
    pos = int(hits[0])
    reach = reach_probs(params.preferences, params.continue_prob, arr)
    return float(reach[pos] * params.preferences[item])


def abandonment_prob(params, seq) -> float:
    """p_a(S) = sum_k q^(k-1) (1-q) prod_{j<=k} (1-u_{S_j})."""
    params = _as_params(params)
    arr = check_sequence(seq, params.n_items)
    if arr.size == 0:
        return 0.0
    u, q = params.preferences, params.continue_prob
    reach = reach_probs(u, q, arr)
    return float((1.0 - q) * np.dot(reach, 1.0 - u[arr]))


def exhaust_prob(params, seq) -> float:
    """Probability the user views every item without selecting or abandoning."""
    params = _as_params(params)
    arr = check_sequence(seq, params.n_items)
    return float(np.prod(params.continue_prob * (1.0 - params.preferences[arr])))


def expected_utility(params, rewards, cost: float, seq) -> float:
    """E[U(S)] = sum_i p_i(S) r_i - c p_a(S); exactly 0 for the empty sequence."""
    params = _as_params(params)
    rewards = np.asarray(rewards, dtype=float)
    if rewards.shape != params.preferences.shape:
        raise ValueError("rewards and preferences differ in length")
    arr = check_sequence(seq, params.n_items)
    return _utility(params.preferences, params.continue_prob, rewards, float(cost), arr)


SELECTED = "selected"
ABANDONED = "abandoned"
EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class InteractionOutcome:
    """One user's response to an offered sequence.

    ``viewed_count`` is the number of positions the user looked at. For
    ``selected`` and ``abandoned`` the terminal position equals it; ``exhausted``
    means every offered item was seen without selection or abandonment.
    """

    viewed_count: int
    terminal: str
    item: int | None = None
    realized_utility: float = 0.0

    def __post_init__(self):
        if self.terminal not in (SELECTED, ABANDONED, EXHAUSTED):
            raise ValueError(f"unknown terminal event {self.terminal!r}")
        if self.viewed_count < 0:
            raise ValueError("viewed_count must be non-negative")
        if self.terminal == SELECTED and self.item is None:
            raise ValueError("a selection outcome needs the selected item")

    @property
    def position(self) -> int | None:
        """1-based terminal position, or None when the sequence was exhausted."""
        return None if self.terminal == EXHAUSTED else self.viewed_count
