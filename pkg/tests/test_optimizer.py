from __future__ import annotations

import math

import numpy as np
import pytest

from automix.effects import parameter_bounds
from automix.optimizer import HarmonyConfig, HarmonyMemory, improvise, search
from automix.pipeline import MixObjective, neutral_vector

NEVER_STOP = -1.0  # objectives are non-negative, so this target never fires


class TestHarmonyConfig:
    def test_defaults(self):
        config = HarmonyConfig()
        assert config.memory_size == 10
        assert config.hmcr == 0.9
        assert config.par == 0.3
        assert config.bandwidth_fraction == 0.05
        assert config.max_iterations == 500
        assert config.target_objective == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"memory_size": 1},
            {"hmcr": 1.5},
            {"par": -0.1},
            {"max_iterations": 0},
            {"bandwidth_fraction": -0.2},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            HarmonyConfig(**kwargs)

    def test_from_mapping_rejects_unknown_keys(self):
        with pytest.raises(ValueError, match="population"):
            HarmonyConfig.from_mapping({"population": 3})

    def test_with_overrides_skips_none(self):
        config = HarmonyConfig().with_overrides(rng_seed=None, max_iterations=7)
        assert config.rng_seed == 0
        assert config.max_iterations == 7


class TestImprovise:
    def _memory(self, rows: np.ndarray) -> HarmonyMemory:
        return HarmonyMemory(rows.copy(), np.zeros(rows.shape[0]))

    def test_pure_memory_reproduces_identical_rows(self):
        bounds = np.array([[0.0, 1.0]] * 6)
        row = np.full(6, 0.25)
        memory = self._memory(np.tile(row, (4, 1)))
        config = HarmonyConfig(hmcr=1.0, par=0.0)
        out = improvise(memory, bounds, config, np.random.default_rng(0))
        np.testing.assert_array_equal(out, row)

    def test_zero_hmcr_ignores_memory(self):
        bounds = np.array([[10.0, 20.0]] * 8)
        memory = self._memory(np.full((4, 8), 15.0))
        config = HarmonyConfig(hmcr=0.0, par=0.0)
        rng = np.random.default_rng(1)
        out = improvise(memory, bounds, config, rng)
        assert np.all((out >= 10.0) & (out <= 20.0))
        assert not np.any(out == 15.0)

    def test_always_inside_box(self):
        rng = np.random.default_rng(2)
        bounds = parameter_bounds(2)
        memory = self._memory(
            rng.uniform(bounds[:, 0], bounds[:, 1], size=(5, bounds.shape[0]))
        )
        for hmcr, par, bw in [(0.9, 0.3, 0.05), (0.5, 1.0, 0.5), (1.0, 1.0, 1.0)]:
            config = HarmonyConfig(hmcr=hmcr, par=par, bandwidth_fraction=bw)
            for _ in range(20):
                out = improvise(memory, bounds, config, rng)
                assert np.all(out >= bounds[:, 0]) and np.all(out <= bounds[:, 1])


class TestSearch:
    def _sphere(self, center: np.ndarray):
        return lambda v: float(np.sum((v - center) ** 2))

    def test_runs_exactly_max_iterations_when_target_unreachable(self):
        bounds = np.array([[-1.0, 1.0]] * 4)
        config = HarmonyConfig(max_iterations=57, target_objective=NEVER_STOP, rng_seed=3)
        result = search(self._sphere(np.zeros(4)), bounds, config)
        assert len(result.trace.best_values) == 57
        assert result.trace.evaluations == 57 + config.memory_size

    def test_trace_is_monotone_non_increasing(self):
        bounds = np.array([[-2.0, 2.0]] * 6)
        config = HarmonyConfig(max_iterations=200, target_objective=NEVER_STOP, rng_seed=4)
        result = search(self._sphere(np.full(6, 0.5)), bounds, config)
        assert np.all(np.diff(result.trace.best_values) <= 0)

    def test_fixed_seed_reproduces_run_exactly(self):
        bounds = parameter_bounds(1)
        config = HarmonyConfig(max_iterations=80, target_objective=NEVER_STOP, rng_seed=5)
        center = (bounds[:, 0] + bounds[:, 1]) / 2.0
        first = search(self._sphere(center), bounds, config)
        second = search(self._sphere(center), bounds, config)
        np.testing.assert_array_equal(first.best_vector, second.best_vector)
        assert first.best_value == second.best_value
        assert first.trace.best_values == second.trace.best_values

    def test_memory_invariants_after_search(self):
        bounds = parameter_bounds(1)
        config = HarmonyConfig(max_iterations=120, target_objective=NEVER_STOP, rng_seed=6)
        objective = self._sphere(bounds[:, 0] * 0.25 + bounds[:, 1] * 0.75)
        result = search(objective, bounds, config)
        assert np.all(result.memory.vectors >= bounds[:, 0])
        assert np.all(result.memory.vectors <= bounds[:, 1])
        for row, cached in zip(result.memory.vectors, result.memory.values):
            assert objective(row) == pytest.approx(cached, rel=1e-12)

    def test_early_stop_on_target(self):
        bounds = np.array([[0.0, 1.0]] * 3)
        config = HarmonyConfig(max_iterations=500, target_objective=10.0, rng_seed=7)
        result = search(lambda v: float(np.sum(v)), bounds, config)
        # every vector scores below the target, so the loop exits immediately
        assert len(result.trace.best_values) == 0
        assert result.best_value <= 10.0

    def test_non_finite_candidates_are_rejected_not_fatal(self):
        bounds = np.array([[0.0, 1.0]] * 2)
        calls = {"n": 0}

        def flaky(v):
            calls["n"] += 1
            return math.nan if calls["n"] % 3 == 0 else float(np.sum(v**2))

        config = HarmonyConfig(max_iterations=60, target_objective=NEVER_STOP, rng_seed=8)
        result = search(flaky, bounds, config)
        assert math.isfinite(result.best_value)
        assert np.all(np.diff(result.trace.best_values) <= 0)

    def test_beats_pure_random_sampling_on_sphere(self):
        # oracle: the mean objective of 500 uniform random samples
        bounds = parameter_bounds(1)
        lo, hi = bounds[:, 0], bounds[:, 1]
        center = lo + 0.3 * (hi - lo)
        objective = self._sphere(center)

        baseline_rng = np.random.default_rng(99)
        baseline = np.mean(
            [objective(baseline_rng.uniform(lo, hi)) for _ in range(500)]
        )
        config = HarmonyConfig(max_iterations=500, target_objective=NEVER_STOP, rng_seed=9)
        result = search(objective, bounds, config)
        assert result.best_value < 0.05 * baseline


class TestMixObjective:
    def test_objective_equals_weighted_report(self, two_normalized_tracks):
        objective = MixObjective(two_normalized_tracks)
        vector = neutral_vector(2)
        report = objective.masking(vector)
        assert objective(vector) == pytest.approx(
            report.total + report.imbalance, rel=1e-12
        )

    def test_custom_weights(self, two_normalized_tracks):
        objective = MixObjective(
            two_normalized_tracks, total_weight=2.0, imbalance_weight=0.5
        )
        vector = neutral_vector(2)
        report = objective.masking(vector)
        assert objective(vector) == pytest.approx(
            2.0 * report.total + 0.5 * report.imbalance, rel=1e-12
        )

    def test_deterministic(self, two_normalized_tracks):
        objective = MixObjective(two_normalized_tracks)
        rng = np.random.default_rng(10)
        vector = rng.uniform(objective.bounds[:, 0], objective.bounds[:, 1])
        assert objective(vector) == objective(vector)

    def test_rejects_single_track(self, two_normalized_tracks):
        with pytest.raises(ValueError):
            MixObjective(two_normalized_tracks[:1])
