import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from fatigue_bandit import harness
from fatigue_bandit.harness import (
    AggregateResult,
    ConfigError,
    Dist,
    ExperimentConfig,
    checkpoint_grid,
    derive_seed,
    emit_csv,
    policy_seed,
    read_csv,
    run_experiment,
)
from fatigue_bandit.policies import POLICIES

SMALL = ExperimentConfig(n_items=6, horizon=300, replications=3, seed=5,
                         policies=("beta-ts", "ucb"), pref_dist=Dist("uniform", 0.0, 0.5))


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(SMALL.to_json()))
        assert ExperimentConfig.load(path) == SMALL

    def test_explicit_distribution(self):
        cfg = ExperimentConfig.from_json({"n_items": 2, "pref_dist": [0.1, 0.4],
                                          "reward_dist": {"kind": "explicit", "values": [1, 0.5]}})
        inst = harness.sample_instance(cfg, 0)
        assert inst.preferences.tolist() == [0.1, 0.4] and inst.rewards.tolist() == [1.0, 0.5]

    @pytest.mark.parametrize("obj,field", [
        ({"n_items": 0}, "n_items"),
        ({"horizon": -3}, "horizon"),
        ({"replications": 0}, "replications"),
        ({"policies": ["thompson"]}, "policies"),
        ({"cost": 1.5}, "cost"),
        ({"pref_dist": {"kind": "uniform", "low": 0.0, "high": 2.0}}, "pref_dist"),
        ({"n_items": 3, "reward_dist": [0.1]}, "reward_dist"),
        ({"sbors": {"alpha": -1}}, "sbors"),
        ({"sbors": {"gamma": 1}}, "sbors"),
        ({"colour": "red"}, "unknown keys"),
    ])
    def test_field_errors(self, obj, field):
        with pytest.raises(ConfigError, match=field):
            ExperimentConfig.from_json(obj)

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.load(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            ExperimentConfig.load(bad)


def test_seed_fan_out_injective():
    seen = {}
    for master in range(3):
        for rep in range(50):
            for p in POLICIES + ("oracle", "worst"):
                seen.setdefault(policy_seed(master, rep, p), []).append((master, rep, p))
            for stream in (101, 102):
                seen.setdefault(derive_seed(master, rep, stream), []).append((master, rep, stream))
    assert all(len(v) == 1 for v in seen.values())


def test_checkpoint_grid():
    grid = checkpoint_grid(20_000)
    assert grid[0] == 1 and grid[-1] == 20_000
    assert np.all(np.diff(grid) > 0) and grid.size <= 101
    assert checkpoint_grid(1).tolist() == [1]
    assert checkpoint_grid(7).tolist() == [1, 2, 3, 4, 5, 6, 7]


class TestRunExperiment:
    def test_oracle_zero(self):
        res = run_experiment(replace(SMALL, replications=1, policies=("oracle",)), workers=1)
        assert res.mean("oracle")[-1] == 0.0

    def test_deterministic(self):
        a = run_experiment(SMALL, workers=1)
        b = run_experiment(SMALL, workers=1)
        for p in SMALL.policies:
            assert a.cumulative[p].tobytes() == b.cumulative[p].tobytes()

    def test_parallel_matches_serial(self):
        a = run_experiment(SMALL, workers=1)
        b = run_experiment(SMALL, workers=3)
        for p in SMALL.policies:
            assert a.cumulative[p].tobytes() == b.cumulative[p].tobytes()

    def test_policy_order_irrelevant(self):
        a = run_experiment(SMALL, workers=1)
        b = run_experiment(replace(SMALL, policies=("ucb", "beta-ts")), workers=1)
        for p in SMALL.policies:
            assert a.cumulative[p].tobytes() == b.cumulative[p].tobytes()

    def test_aggregation_linear(self):
        res = run_experiment(SMALL, workers=1)
        for p in SMALL.policies:
            np.testing.assert_allclose(res.mean(p), res.cumulative[p].sum(axis=0) / 3, atol=1e-12)
            assert res.checkpoints[-1] == SMALL.horizon

    def test_traces_match_checkpoints(self):
        res = run_experiment(SMALL, workers=1, keep_traces=True)
        for p in SMALL.policies:
            for rep, trace in enumerate(res.traces[p]):
                np.testing.assert_array_equal(trace.cumulative[res.checkpoints - 1], res.cumulative[p][rep])

    def test_common_instances(self):
        res = run_experiment(replace(SMALL, policies=("oracle", "beta-ts")), workers=1, keep_traces=True)
        for rep in range(SMALL.replications):
            assert res.traces["oracle"][rep].optimal_utility == res.traces["beta-ts"][rep].optimal_utility

    def test_instances_differ_across_replications(self):
        a = harness.sample_instance(SMALL, 0)
        b = harness.sample_instance(SMALL, 1)
        assert not np.array_equal(a.preferences, b.preferences)

    def test_worker_env(self, monkeypatch):
        monkeypatch.setenv(harness.WORKERS_ENV, "2")
        assert harness.worker_count() == 2
        monkeypatch.setenv(harness.WORKERS_ENV, "many")
        with pytest.raises(ConfigError):
            harness.worker_count()


class TestCsv:
    def test_rows_and_round_trip(self, tmp_path):
        cfg = replace(SMALL, replications=1, horizon=3)
        res = run_experiment(cfg, workers=1)
        path = tmp_path / "out.csv"
        emit_csv(res, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == list(harness.CSV_COLUMNS)
        assert len(rows) == 1 + 2 * 1 * 3
        back = read_csv(path)
        assert back.checkpoints.tolist() == res.checkpoints.tolist()
        for p in cfg.policies:
            assert back.cumulative[p].tobytes() == res.cumulative[p].tobytes()
            assert back.mean_lengths[p].tobytes() == res.mean_lengths[p].tobytes()
            assert back.seeds[p] == res.seeds[p]

    def test_empty_grid_header_only(self, tmp_path):
        empty = AggregateResult(np.array([], dtype=int), {"sbors": np.zeros((1, 0))},
                                {"sbors": np.zeros((1, 0))}, {"sbors": [1]})
        path = tmp_path / "e.csv"
        emit_csv(empty, path)
        assert path.read_text() == ",".join(harness.CSV_COLUMNS) + "\n"

    def test_unwritable(self, tmp_path):
        res = run_experiment(replace(SMALL, replications=1, horizon=2), workers=1)
        with pytest.raises(OSError, match="missing"):
            emit_csv(res, tmp_path / "missing" / "x.csv")

    def test_sidecar(self, tmp_path):
        res = run_experiment(replace(SMALL, replications=1, horizon=2), workers=1)
        path = tmp_path / "x.json"
        harness.emit_sidecar(path, SMALL.to_json(), res)
        doc = json.loads(path.read_text())
        assert doc["config"]["n_items"] == 6 and doc["build"].startswith("0.1.0")
        assert set(doc["summary"]) == set(SMALL.policies)


class TestLemmaChecks:
    def test_concentration_example_point(self):
        rep = harness.check_concentration(10**6, 2.0, (10.0,), np.random.default_rng(0),
                                          means=(0.5,), sample_sizes=(100,))
        (point,) = rep.details
        assert point["bound"] == pytest.approx(2e-4)
        assert point["rate"] <= 4e-4 and rep.ok

    def test_concentration_beta_monotone(self):
        rng = np.random.default_rng(1)
        lo = harness.check_concentration(10**4, 2.0, (10.0,), rng)
        hi = harness.check_concentration(10**4, 4.0, (10.0,), rng)
        for a, b in zip(lo.details, hi.details):
            assert b["bound"] == pytest.approx(a["bound"] ** 2 / 2)
            assert b["bound"] < a["bound"]

    def test_concentration_degenerate(self):
        rep = harness.check_concentration(10**4, 2.0, (5.0,), np.random.default_rng(0), means=(0.0,))
        assert all(d["rate"] == 0.0 for d in rep.details)

    def test_lipschitz_and_monotonicity(self):
        rng = np.random.default_rng(0)
        assert harness.check_lipschitz(2_000, rng).ok
        assert harness.check_monotonicity(2_000, rng).ok

    def test_identical_pair(self):
        from fatigue_bandit.model import _utility
        from fatigue_bandit.oracle import _order
        rng = np.random.default_rng(0)
        v, r = rng.uniform(size=8), rng.uniform(size=8)
        best = _order(v, 0.7, r, 0.4)
        assert _utility(v, 0.7, r, 0.4, best) - _utility(v.copy(), 0.7, r, 0.4, best) == 0.0

    def test_single_coordinate_perturbation(self):
        from fatigue_bandit.model import _utility
        from fatigue_bandit.oracle import _order
        rng = np.random.default_rng(4)
        for _ in range(500):
            v, r = rng.uniform(size=8), rng.uniform(size=8)
            q, c = rng.uniform(), rng.uniform()
            best = _order(v, q, r, c)
            if best.size == 0:
                continue
            w = v.copy()
            delta = rng.uniform(0, 0.1)
            i = rng.choice(best)
            w[i] = min(1.0, w[i] + delta)
            lhs = abs(_utility(v, q, r, c, best) - _utility(w, q, r, c, best))
            assert lhs <= 2 * delta + 1e-12
            # raising a preference inside S*_v never lowers its utility
            assert _utility(w, q, r, c, best) >= _utility(v, q, r, c, best) - 1e-12

    def test_mutant_detected(self):
        rng = np.random.default_rng(0)
        lip = harness.check_lipschitz(2_000, rng, utility=harness.mutant_utility)
        mono = harness.check_monotonicity(2_000, rng, utility=harness.mutant_utility)
        assert not (lip.ok and mono.ok)
        assert mono.counterexample is not None

    def test_unbiasedness(self):
        rep = harness.check_unbiasedness(20_000, np.random.default_rng(0))
        assert rep.ok and rep.checked == 6

    def test_oracle_check(self):
        assert harness.check_oracle(range(1, 5), 50, np.random.default_rng(0)).ok

    def test_fidelity(self):
        assert harness.check_model_fidelity(3, 100_000, np.random.default_rng(0)).ok
