"""Fatigue-aware sequential recommendation: user model, optimal-sequence oracle,
online policies and a seeded regret simulator."""

from fatigue_bandit.model import (
    ParamVector,
    ProblemInstance,
    abandonment_prob,
    exhaust_prob,
    expected_utility,
    selection_prob,
)
from fatigue_bandit.oracle import brute_force_optimal, optimal_sequence, scores
from fatigue_bandit.policies import POLICIES, PosteriorState, SborsConfig, UcbVConfig
from fatigue_bandit.simulator import InteractionOutcome, RegretTrace, run_episode, simulate_user

__version__ = "0.1.0"

__all__ = [
    "POLICIES",
    "InteractionOutcome",
    "ParamVector",
    "PosteriorState",
    "ProblemInstance",
    "RegretTrace",
    "SborsConfig",
    "UcbVConfig",
    "abandonment_prob",
    "brute_force_optimal",
    "exhaust_prob",
    "expected_utility",
    "optimal_sequence",
    "run_episode",
    "scores",
    "selection_prob",
    "simulate_user",
]
