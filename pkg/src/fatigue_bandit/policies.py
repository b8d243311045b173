"""Online policies sharing one set of posterior counters.

Counters follow the Beta(1, 1) initialisation: every item starts with one
selection and one failure, and the continuation counters start at one each.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from fatigue_bandit.model import (
    ABANDONED,
    EXHAUSTED,
    SELECTED,
    InteractionOutcome,
    ParamVector,
    Sequence,
)
from fatigue_bandit.oracle import _order

POLICIES = ("beta-ts", "sbors", "ucb", "ucb-v")

# keeps the oracle's score denominator 1 - q(1 - u) positive
Q_EPS = 1e-9


@dataclass
class PosteriorState:
    select_counts: np.ndarray
    fail_counts: np.ndarray
    no_abandon_count: int = 1
    abandon_count: int = 1

    @classmethod
    def initial(cls, n_items: int) -> PosteriorState:
        return cls(np.ones(n_items, dtype=np.int64), np.ones(n_items, dtype=np.int64))

    def __post_init__(self):
        self.select_counts = np.asarray(self.select_counts, dtype=np.int64)
        self.fail_counts = np.asarray(self.fail_counts, dtype=np.int64)
        if self.select_counts.shape != self.fail_counts.shape:
            raise ValueError("select and fail counters differ in length")
        if (
            np.any(self.select_counts < 1)
            or np.any(self.fail_counts < 1)
            or self.no_abandon_count < 1
            or self.abandon_count < 1
        ):
            raise ValueError("all posterior counters must be >= 1")

    @property
    def n_items(self) -> int:
        return int(self.select_counts.size)

    @property
    def trials(self) -> np.ndarray:
        """T_i = c_i + f_i."""
        return self.select_counts + self.fail_counts

    @property
    def q_trials(self) -> int:
        """N_q = n_e + n_a."""
        return self.no_abandon_count + self.abandon_count

    def copy(self) -> PosteriorState:
        return PosteriorState(
            self.select_counts.copy(), self.fail_counts.copy(),
            self.no_abandon_count, self.abandon_count,
        )


@dataclass(frozen=True)
class SborsConfig:
    """Gaussian-approximation constants and the number of correlated samples R."""

    alpha: float = 1.0
    beta: float = 2.0
    n_samples: int = 10

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError(f"n_samples must be a positive integer, got {self.n_samples}")
        if self.beta < 2:
            warnings.warn(
                f"beta={self.beta} < 2 lies outside the range covered by the regret bound",
                stacklevel=3,
            )


@dataclass(frozen=True)
class UcbVConfig:
    support_bound: float = 1.0

    def __post_init__(self):
        if not 0 < self.support_bound <= 1:
            raise ValueError(f"support_bound must lie in (0, 1], got {self.support_bound}")


def _clip(u: np.ndarray, q: float) -> tuple[np.ndarray, float]:
    return np.clip(u, 0.0, 1.0), min(max(q, 0.0), 1.0 - Q_EPS)


def _clamped(u: np.ndarray, q: float) -> ParamVector:
    return ParamVector(*_clip(u, q))


def unbiased_estimates(state: PosteriorState) -> tuple[np.ndarray, float]:
    u_hat = state.select_counts / state.trials
    q_hat = state.no_abandon_count / state.q_trials
    return u_hat, q_hat


def _beta_ts(state, rng):
    u = rng.beta(state.select_counts, state.fail_counts)
    q = rng.beta(state.no_abandon_count, state.abandon_count)
    return u, float(q)


def beta_ts_sample(state: PosteriorState, rng: np.random.Generator) -> ParamVector:
    return _clamped(*_beta_ts(state, rng))


def sbors_stats(state: PosteriorState, cfg: SborsConfig):
    """Means and inflated standard deviations of the Gaussian posteriors.

    Returns ``(u_hat, sigma_u, q_hat, sigma_q)``.
    """
    u_hat, q_hat = unbiased_estimates(state)
    t_i = state.trials
    n_q = state.q_trials
    sigma_u = np.sqrt(cfg.alpha * u_hat * (1.0 - u_hat) / (t_i + 1)) + np.sqrt(cfg.beta / t_i)
    sigma_q = math.sqrt(cfg.alpha * q_hat * (1.0 - q_hat) / (n_q + 1)) + math.sqrt(cfg.beta / n_q)
    return u_hat, sigma_u, q_hat, sigma_q


def sbors_raw_sample(state, cfg, rng=None, theta=None):
    """Unclamped correlated sample: max over R draws sharing one normal per draw.

    ``theta`` overrides the R standard-normal draws (test hook).
    """
    u_hat, sigma_u, q_hat, sigma_q = sbors_stats(state, cfg)
    if theta is None:
        theta = rng.standard_normal(cfg.n_samples)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    u_draws = u_hat[None, :] + theta[:, None] * sigma_u[None, :]
    q_draws = q_hat + theta * sigma_q
    return u_draws.max(axis=0), float(q_draws.max())


def sbors_sample(state: PosteriorState, cfg: SborsConfig, rng=None, theta=None) -> ParamVector:
    u, q = sbors_raw_sample(state, cfg, rng, theta)
    return _clamped(u, q)


def _ucb_v(state, cfg, t):
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    u_hat, q_hat = unbiased_estimates(state)
    log_t = math.log(t)
    t_i = state.trials
    u = u_hat + np.sqrt(2.0 * u_hat * (1.0 - u_hat) * log_t / t_i) + cfg.support_bound * log_t / t_i
    q = q_hat + math.sqrt(2.0 * log_t / state.q_trials)
    return u, q


def ucb_v_indices(state: PosteriorState, cfg: UcbVConfig, t: int) -> ParamVector:
    """Variance-aware optimistic indices; Var(u_hat) is the plug-in u_hat(1 - u_hat)."""
    return _clamped(*_ucb_v(state, cfg, t))


def _ucb(state, t):
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    u_hat, q_hat = unbiased_estimates(state)
    log_t = math.log(t)
    u = u_hat + np.sqrt(2.0 * log_t / state.trials)
    q = q_hat + math.sqrt(2.0 * log_t / state.q_trials)
    return u, q


def ucb_baseline_indices(state: PosteriorState, t: int) -> ParamVector:
    """Plain UCB indices, u_hat + sqrt(2 log t / T_i) and q_hat + sqrt(2 log t / N_q)."""
    return _clamped(*_ucb(state, t))


def update_posterior(state: PosteriorState, seq, outcome: InteractionOutcome) -> PosteriorState:
    """Apply one round of feedback in place and return ``state``.

    Every position before the terminal one was viewed, not selected and not
    abandoned. The terminal position adds a selection, an abandonment, or (for
    an exhausted sequence) one more continuation.
    """
    seq = np.asarray(seq, dtype=np.int64).reshape(-1)
    k = outcome.viewed_count
    if k > seq.size:
        raise ValueError(f"outcome viewed {k} items of a length-{seq.size} sequence")
    if outcome.terminal == EXHAUSTED and k != seq.size:
        raise ValueError("an exhausted outcome must view the whole sequence")
    if k == 0:
        if outcome.terminal != EXHAUSTED:
            raise ValueError("a selection or abandonment needs at least one viewed item")
        return state
    last = int(seq[k - 1])
    if outcome.terminal == SELECTED and outcome.item != last:
        raise ValueError(f"selected item {outcome.item} is not at position {k} of {tuple(seq)}")

    passed = seq[: k - 1]
    state.fail_counts[passed] += 1
    state.no_abandon_count += passed.size
    if outcome.terminal == SELECTED:
        state.select_counts[last] += 1
    elif outcome.terminal == ABANDONED:
        state.fail_counts[last] += 1
        state.abandon_count += 1
    else:
        state.fail_counts[last] += 1
        state.no_abandon_count += 1
    return state


@dataclass
class PolicySettings:
    sbors: SborsConfig = field(default_factory=SborsConfig)
    ucbv: UcbVConfig = field(default_factory=UcbVConfig)


def policy_arrays(policy: str, state: PosteriorState, t: int, rng, settings=None):
    """Clamped ``(u, q)`` the policy feeds to the oracle at round ``t``."""
    settings = settings or PolicySettings()
    if policy == "beta-ts":
        raw = _beta_ts(state, rng)
    elif policy == "sbors":
        raw = sbors_raw_sample(state, settings.sbors, rng)
    elif policy == "ucb":
        raw = _ucb(state, t)
    elif policy == "ucb-v":
        raw = _ucb_v(state, settings.ucbv, t)
    else:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    return _clip(*raw)


def policy_params(policy: str, state: PosteriorState, t: int, rng, settings=None) -> ParamVector:
    return ParamVector(*policy_arrays(policy, state, t, rng, settings))


def select_sequence(policy: str, state, t: int, rewards, cost: float, rng, settings=None) -> Sequence:
    """Sequence offered at round ``t``: the oracle's answer under the policy's parameters."""
    u, q = policy_arrays(policy, state, t, rng, settings)
    rewards = np.asarray(rewards, dtype=float)
    return tuple(_order(u, q, rewards, float(cost)).tolist())
