import numpy as np
import pytest
from scipy import stats

from cleanguide import estimator
from cleanguide.estimator import (AccuracySamples, DiscrepancyLog, Prediction,
                                  RankDeficiencyError, adjust, fit_predict,
                                  measure_current_f1, measure_pollution_effect,
                                  record_outcome)
from cleanguide.models import ModelSpec
from cleanguide.pollution import (GAUSSIAN_NOISE, MISSING_VALUES,
                                  PrePollutionSetting, apply_pre_pollution)
from cleanguide.tabular import TRAIN

from conftest import make_dataset


def samples_from(points):
    return AccuracySamples(0, MISSING_VALUES, points, [])


def nig_oracle(x, y, x_star):
    """Direct dense evaluation of the conjugate normal-inverse-gamma update."""
    design = np.column_stack([np.ones(len(x)), x])
    lam0 = estimator.PRIOR_PRECISION * np.eye(2)
    lam_n = lam0 + design.T @ design
    lam_inv = np.linalg.inv(lam_n)
    coef = lam_inv @ design.T @ y
    a_n = estimator.PRIOR_A + len(y) / 2.0
    b_n = estimator.PRIOR_B + 0.5 * (y @ y - coef @ lam_n @ coef)
    row = np.array([1.0, x_star])
    mean = row @ coef
    scale = np.sqrt(b_n / a_n * (1.0 + row @ lam_inv @ row))
    width = 2.0 * stats.t.ppf(0.975, 2.0 * a_n) * scale
    return coef, lam_inv, a_n, b_n, mean, width


class TestFitPredict:
    def test_noiseless_line_extrapolates_exactly(self):
        points = [(0.0, 0, 0.80), (0.01, 1, 0.79), (0.02, 1, 0.78)]
        pred = fit_predict(samples_from(points))
        assert abs(pred.predicted_f1 - 0.81) <= 1e-6
        assert pred.uncertainty >= 0.0

    def test_flat_points_predict_the_current_f1(self):
        points = [(0.0, 0, 0.75), (0.01, 1, 0.75), (0.02, 1, 0.75)]
        pred = fit_predict(samples_from(points))
        assert abs(pred.predicted_f1 - 0.75) <= 1e-6

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            fit_predict(samples_from([(0.0, 0, 0.8), (0.01, 1, 0.7)]))

    def test_identical_levels_are_rank_deficient(self):
        points = [(0.01, 1, 0.8), (0.01, 2, 0.7), (0.01, 3, 0.75)]
        with pytest.raises(RankDeficiencyError):
            fit_predict(samples_from(points))

    def test_posterior_matches_closed_form_on_random_instances(self):
        rng = np.random.default_rng(21)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(3, 12))
            x = np.round(rng.integers(0, 3, size=n) * 0.01, 10)
            while len(np.unique(x)) < 2:
                x = np.round(rng.integers(0, 3, size=n) * 0.01, 10)
            y = rng.uniform(0.2, 0.95, size=n)
            points = [(float(xi), 1, float(yi)) for xi, yi in zip(x, y)]
            pred = fit_predict(samples_from(points))
            # the covariate is measured in cleaning-step units
            coef, cov, a_n, b_n, mean, width = nig_oracle(x / 0.01, y, -1.0)
            worst = max(worst,
                        np.abs(pred.posterior.coef_mean - coef).max(),
                        np.abs(pred.posterior.cov_scale - cov).max(),
                        abs(pred.posterior.a - a_n), abs(pred.posterior.b - b_n),
                        abs(pred.predicted_f1 - mean),
                        abs(pred.uncertainty - width))
        assert worst <= 1e-8

    def test_decreasing_points_extrapolate_upwards(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            base = rng.uniform(0.5, 0.9)
            slope = rng.uniform(0.2, 2.0)
            points = [(0.0, 0, base)]
            for level in (0.01, 0.02):
                for c in (1, 2, 3):
                    points.append((level, c, base - slope * level))
            pred = fit_predict(samples_from(points))
            assert pred.predicted_f1 > base

    def test_duplicating_evidence_does_not_increase_uncertainty(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            x = np.array([0.0, 0.01, 0.02] * 3)
            y = np.clip(rng.uniform(0.4, 0.9)
                        - rng.uniform(0, 1) * x
                        + rng.normal(0, 0.01, len(x)), 0, 1)
            points = [(float(a), 1, float(b)) for a, b in zip(x, y)]
            u_once = fit_predict(samples_from(points)).uncertainty
            u_twice = fit_predict(samples_from(points + points)).uncertainty
            assert u_twice <= u_once + 1e-12


class TestMeasure:
    def test_point_counts(self, small_synth):
        spec = ModelSpec("logreg", {"l2": 1e-3})
        samples = measure_pollution_effect(small_synth, 0, MISSING_VALUES,
                                           spec, combos=3, seed=5)
        assert len(samples.points) == 1 + 2 * 3
        assert sum(1 for p in samples.points if p[0] == 0.0) == 1
        assert len(samples.states) == 6

    def test_single_combo_three_points(self, small_synth):
        spec = ModelSpec("logreg", {"l2": 1e-3})
        samples = measure_pollution_effect(small_synth, 0, MISSING_VALUES,
                                           spec, combos=1, seed=5)
        assert [p[0] for p in samples.points] == [0.0, 0.01, 0.02]

    def test_base_dataset_unchanged(self, small_synth):
        spec = ModelSpec("logreg", {"l2": 1e-3})
        before = small_synth.snapshot()
        measure_pollution_effect(small_synth, 0, GAUSSIAN_NOISE, spec,
                                 combos=2, seed=1)
        after = small_synth.snapshot()
        for a, b in zip(before.values, after.values):
            assert np.array_equal(a, b)
        assert np.array_equal(before.provenance, after.provenance)

    def test_ignored_constant_column_gives_identical_points(self):
        rng = np.random.default_rng(4)
        n = 400
        labels = np.arange(n) % 2
        ds = make_dataset(
            numeric={"signal": np.where(labels == 1, 2.0, -2.0)
                     + rng.normal(0, 0.5, n),
                     "flat": np.full(n, 3.14)},
            labels=labels, seed=2, truth=True)
        spec = ModelSpec("logreg", {"l2": 1e-3})
        samples = measure_pollution_effect(ds, ds.feature_index("flat"),
                                           MISSING_VALUES, spec, combos=2,
                                           seed=7)
        f1s = {p[2] for p in samples.points}
        assert len(f1s) == 1

    def test_priority_cells_cover_touched(self, small_synth):
        spec = ModelSpec("logreg", {"l2": 1e-3})
        samples = measure_pollution_effect(small_synth, 0, MISSING_VALUES,
                                           spec, combos=2, seed=3)
        cells = set(samples.priority_cells(TRAIN).tolist())
        for state in samples.states:
            assert set(state.touched[TRAIN].tolist()) <= cells


class TestAdjust:
    def pred(self, value=0.8):
        return Prediction(0, MISSING_VALUES, value, 0.02)

    def test_empty_log_is_identity(self):
        log = DiscrepancyLog()
        out = adjust(self.pred(), log)
        assert out.predicted_f1 == 0.8

    def test_mean_shift(self):
        log = DiscrepancyLog()
        record_outcome(log, 0, MISSING_VALUES, 0.70, 0.72)
        record_outcome(log, 0, MISSING_VALUES, 0.70, 0.74)
        out = adjust(self.pred(), log)
        assert out.predicted_f1 == pytest.approx(0.83)

    def test_zero_sum_discrepancies_cancel(self):
        log = DiscrepancyLog()
        record_outcome(log, 0, MISSING_VALUES, 0.7, 0.75)
        record_outcome(log, 0, MISSING_VALUES, 0.7, 0.65)
        assert adjust(self.pred(), log).predicted_f1 == pytest.approx(0.8)

    def test_features_isolated(self):
        log = DiscrepancyLog()
        record_outcome(log, 1, MISSING_VALUES, 0.5, 0.9)
        assert adjust(self.pred(), log).predicted_f1 == 0.8

    def test_error_types_isolated(self):
        log = DiscrepancyLog()
        record_outcome(log, 0, GAUSSIAN_NOISE, 0.5, 0.9)
        assert adjust(self.pred(), log).predicted_f1 == 0.8

    def test_clamped_to_unit_interval(self):
        log = DiscrepancyLog()
        record_outcome(log, 0, MISSING_VALUES, 0.1, 0.9)
        assert adjust(self.pred(0.9), log).predicted_f1 == 1.0

    def test_outcomes_validated(self):
        log = DiscrepancyLog()
        with pytest.raises(ValueError):
            record_outcome(log, 0, MISSING_VALUES, 1.4, 0.5)

    def test_log_round_trips(self):
        log = DiscrepancyLog()
        record_outcome(log, 2, GAUSSIAN_NOISE, 0.5, 0.6)
        again = DiscrepancyLog.from_dict(log.to_dict())
        assert again.entries == log.entries
