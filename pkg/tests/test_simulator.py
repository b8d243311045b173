import numpy as np
import pytest
from scipy import stats

from fatigue_bandit.model import (
    ABANDONED,
    EXHAUSTED,
    SELECTED,
    ProblemInstance,
    abandonment_prob,
    exhaust_prob,
    expected_utility,
    selection_prob,
)
from fatigue_bandit.oracle import brute_force_worst, optimal_sequence
from fatigue_bandit.policies import PolicySettings, SborsConfig
from fatigue_bandit.simulator import pseudo_regret, run_episode, simulate_user, simulate_users


def test_certain_selection():
    inst = ProblemInstance([0.4, 0.9], [1.0, 0.5], 0.3, 0.5)
    rng = np.random.default_rng(0)
    for _ in range(50):
        out = simulate_user(inst, (0, 1), rng)
        assert (out.terminal, out.item, out.viewed_count, out.position) == (SELECTED, 0, 1, 1)
        assert out.realized_utility == 0.4


def test_certain_abandonment():
    inst = ProblemInstance([0.4, 0.9], [0.0, 0.0], 1.0, 0.7)
    rng = np.random.default_rng(0)
    for _ in range(50):
        out = simulate_user(inst, (1, 0), rng)
        assert (out.terminal, out.viewed_count, out.realized_utility) == (ABANDONED, 1, -0.7)


def test_exhaust_and_empty():
    inst = ProblemInstance([0.4, 0.9], [0.0, 0.0], 0.0, 0.7)
    out = simulate_user(inst, (1, 0), np.random.default_rng(0))
    assert (out.terminal, out.viewed_count, out.position, out.realized_utility) == (EXHAUSTED, 2, None, 0.0)
    out = simulate_user(inst, (), np.random.default_rng(0))
    assert (out.terminal, out.viewed_count) == (EXHAUSTED, 0)


def test_batch_matches_sequential():
    inst = ProblemInstance([0.2, 0.8, 0.5], [0.3, 0.2, 0.4], 0.25, 0.5)
    seq = (2, 0, 1)
    a, b = np.random.default_rng(9), np.random.default_rng(9)
    counts = simulate_users(inst, seq, a, 5_000, chunk=777)
    selected = np.zeros(3, dtype=int)
    abandoned = np.zeros(3, dtype=int)
    exhausted = 0
    for _ in range(5_000):
        out = simulate_user(inst, seq, b)
        if out.terminal == SELECTED:
            selected[out.viewed_count - 1] += 1
        elif out.terminal == ABANDONED:
            abandoned[out.viewed_count - 1] += 1
        else:
            exhausted += 1
    assert counts.selected.tolist() == selected.tolist()
    assert counts.abandoned.tolist() == abandoned.tolist()
    assert counts.exhausted == exhausted
    assert a.random() == b.random()


def test_worked_selection_frequency(worked):
    n = 10**6
    counts = simulate_users(worked, (0, 1), np.random.default_rng(1), n)
    p = selection_prob(worked, (0, 1), 1)
    assert p == pytest.approx(0.378)
    assert abs(counts.selected[1] / n - p) < 4 * np.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize("seed", range(5))
def test_outcome_distribution_chi_square(seed):
    rng = np.random.default_rng(100 + seed)
    n_items = 6
    inst = ProblemInstance(rng.uniform(size=n_items), rng.uniform(size=n_items), rng.uniform(0, 0.5), 0.5)
    seq = tuple(rng.permutation(n_items)[:4].tolist())
    n = 10**6
    counts = simulate_users(inst, seq, rng, n)
    # the per-position abandonment split is closed form too
    reach = np.cumprod(np.r_[1.0, inst.continue_prob * (1 - inst.preferences[list(seq)])])[:-1]
    ab_pos = reach * (1 - inst.preferences[list(seq)]) * inst.abandon_prob
    expected = np.r_[[selection_prob(inst, seq, i) for i in seq], ab_pos, exhaust_prob(inst, seq)]
    assert ab_pos.sum() == pytest.approx(abandonment_prob(inst, seq), abs=1e-15)
    observed = np.r_[counts.selected, counts.abandoned, counts.exhausted]
    assert expected.sum() == pytest.approx(1.0, abs=1e-12)
    _, pvalue = stats.chisquare(observed, expected * n)
    assert pvalue > 1e-4


class TestPseudoRegret:
    def test_at_optimum(self, worked3):
        best = optimal_sequence(worked3.params, worked3.rewards, worked3.cost)
        assert pseudo_regret(worked3, best) == 0.0

    def test_empty(self, worked3):
        best = optimal_sequence(worked3.params, worked3.rewards, worked3.cost)
        value = expected_utility(worked3, worked3.rewards, worked3.cost, best)
        assert pseudo_regret(worked3, ()) == value

    def test_swapped(self, worked3):
        r, c = worked3.rewards, worked3.cost
        gap = expected_utility(worked3, r, c, (0, 1)) - expected_utility(worked3, r, c, (1, 0))
        assert gap > 0
        assert pseudo_regret(worked3, (1, 0)) == pytest.approx(gap, abs=1e-15)


class TestEpisode:
    def test_oracle_policy_zero_regret(self, worked3):
        trace = run_episode(worked3, "oracle", 500, seed=0)
        assert np.all(trace.per_round == 0.0)
        assert trace.cumulative[-1] == 0.0

    def test_worst_policy_linear(self, worked3):
        r, c = worked3.rewards, worked3.cost
        _, worst = brute_force_worst(worked3.params, r, c)
        best = expected_utility(worked3, r, c, (0, 1))
        trace = run_episode(worked3, "worst", 300, seed=0)
        np.testing.assert_allclose(trace.cumulative, np.arange(1, 301) * (best - worst), rtol=1e-12)

    @pytest.mark.parametrize("policy", ["beta-ts", "sbors", "ucb", "ucb-v"])
    def test_trace_invariants(self, policy):
        rng = np.random.default_rng(2)
        inst = ProblemInstance(rng.uniform(size=8), rng.uniform(0, 0.3, size=8), 0.1, 0.5)
        trace = run_episode(inst, policy, 2_000, seed=3)
        assert trace.per_round.min() >= -1e-12
        assert np.all(np.diff(trace.cumulative) >= -1e-12)
        assert trace.offered_lengths.max() <= 8
        assert np.all((trace.realized >= -0.5) & (trace.realized <= inst.rewards.max()))

    @pytest.mark.parametrize("policy", ["beta-ts", "sbors", "ucb", "ucb-v"])
    def test_reproducible(self, policy, worked3):
        a = run_episode(worked3, policy, 1_000, seed=11)
        b = run_episode(worked3, policy, 1_000, seed=11)
        assert a.per_round.tobytes() == b.per_round.tobytes()
        assert a.realized.tobytes() == b.realized.tobytes()

    def test_learns_easy_instance(self):
        inst = ProblemInstance([0.9, 0.2, 0.6, 0.1], [0.6, 0.5, 0.4, 0.05], 0.1, 0.5)
        trace = run_episode(inst, "beta-ts", 5_000, seed=0)
        early = trace.per_round[:500].mean()
        late = trace.per_round[-500:].mean()
        assert late < 0.2 * early

    def test_bad_args(self, worked3):
        with pytest.raises(ValueError):
            run_episode(worked3, "beta-ts", 0, seed=0)
        with pytest.raises(ValueError):
            run_episode(worked3, "nope", 10, seed=0)
        with pytest.raises(ValueError):
            run_episode(worked3, "beta-ts", 10)

    def test_sbors_settings_used(self, worked3):
        a = run_episode(worked3, "sbors", 300, seed=1, settings=PolicySettings(SborsConfig(n_samples=1)))
        b = run_episode(worked3, "sbors", 300, seed=1, settings=PolicySettings(SborsConfig(n_samples=50)))
        assert a.per_round.tobytes() != b.per_round.tobytes()
