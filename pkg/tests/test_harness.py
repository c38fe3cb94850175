import json

import numpy as np
import pytest

from cleanguide import harness
from cleanguide.estimator import measure_current_f1
from cleanguide.metrics import BudgetCurve, advantage
from cleanguide.models import ModelSpec, TableView, fit
from cleanguide.tabular import TRAIN, split


class TestGenerateSynthetic:
    def test_linear_model_scores_high_on_clean_data(self):
        ds = harness.generate_synthetic({"rows": 600, "informative": 2,
                                         "noise": 2, "classes": 2, "seed": 4})
        split(ds, 0.2, 1)
        f1 = measure_current_f1(ds, ModelSpec("logreg", {"l2": 1e-3}))
        assert f1 >= 0.9

    def test_binary_spec_gives_binary_labels(self):
        ds = harness.generate_synthetic({"rows": 100, "informative": 2,
                                         "noise": 0, "classes": 2, "seed": 0})
        assert ds.classes == ["0", "1"]
        assert set(np.unique(ds.labels)) == {0, 1}

    def test_same_spec_same_dataset(self):
        spec = {"rows": 120, "informative": 3, "noise": 1, "classes": 3,
                "seed": 9, "categorical": 1}
        a = harness.generate_synthetic(spec)
        b = harness.generate_synthetic(spec)
        for fa, fb in zip(a.features, b.features):
            assert np.array_equal(fa.values, fb.values)
        assert np.array_equal(a.labels, b.labels)

    def test_truth_store_enabled(self):
        ds = harness.generate_synthetic({"rows": 60, "informative": 2,
                                         "noise": 0, "seed": 1})
        assert ds.simulation_mode

    def test_categorical_columns_are_binned_copies(self):
        ds = harness.generate_synthetic({"rows": 80, "informative": 2,
                                         "noise": 0, "categorical": 1,
                                         "seed": 2})
        assert ds.features[-1].kind == "categorical"
        assert ds.features[-1].categories == ["q1", "q2", "q3", "q4"]

    def test_too_small_specs_rejected(self):
        with pytest.raises(harness.ConfigError):
            harness.generate_synthetic({"rows": 10, "informative": 1,
                                        "noise": 0})


def small_config(**overrides):
    base = {
        "dataset": {"synthetic": {"rows": 400, "informative": 2, "noise": 2,
                                  "classes": 2, "seed": 3}},
        "algorithms": ["logreg"],
        "methods": ["guided", "random"],
        "scenario": {"kind": "single", "error_type": "missing_values"},
        "cost": "constant",
        "budget": 3,
        "pre_pollution": {"mean": 0.15, "cap": 0.5, "count": 2, "seed": 5},
        "seeds": [0],
        "combos": 1,
        "search": {"n_samples": 2},
    }
    base.update(overrides)
    return harness.ExperimentConfig.from_dict(base)


class TestRunExperiment:
    def test_cell_counting(self):
        result, _ = harness.run_experiment(small_config())
        assert len(result["settings"]) == 2
        for entry in result["settings"]:
            cells = entry["algorithms"]["logreg"]["cells"]
            assert [c["method"] for c in cells] == ["guided", "random"]

    def test_bitwise_reproducible(self):
        a, _ = harness.run_experiment(small_config())
        b, _ = harness.run_experiment(small_config())
        assert harness.result_to_json(a) == harness.result_to_json(b)

    def test_every_curve_starts_at_the_shared_dirty_f1(self):
        result, _ = harness.run_experiment(small_config())
        for entry in result["settings"]:
            alg = entry["algorithms"]["logreg"]
            for cell in alg["cells"]:
                assert cell["points"][0][0] == 0.0
                assert cell["points"][0][1] == pytest.approx(alg["dirty_f1"])

    def test_config_validation(self):
        with pytest.raises(harness.ConfigError):
            small_config(algorithms=["nonsense"])
        with pytest.raises(harness.ConfigError):
            small_config(budget=0)
        with pytest.raises(harness.ConfigError):
            small_config(methods=["gradient"], algorithms=["knn"])
        with pytest.raises(harness.ConfigError):
            small_config(scenario={"kind": "single", "error_type": "typo"})

    def test_failing_cell_is_isolated(self, monkeypatch):
        import cleanguide.harness as hmod

        def explode(*args, **kwargs):
            raise RuntimeError("boom")

        monkeypatch.setattr(hmod.baselines, "rr_session", explode)
        result, _ = harness.run_experiment(small_config())
        for entry in result["settings"]:
            cells = entry["algorithms"]["logreg"]["cells"]
            failed = next(c for c in cells if c["method"] == "random")
            fine = next(c for c in cells if c["method"] == "guided")
            assert "error" in failed and "boom" in failed["error"]
            assert "points" in fine and "error" not in fine

    def test_save_writes_results_and_curves(self, tmp_path):
        result, timings = harness.run_experiment(small_config())
        harness.save_result(result, timings, str(tmp_path))
        assert (tmp_path / "results.json").exists()
        assert (tmp_path / "timings.json").exists()
        header = (tmp_path / "curves.csv").read_text().splitlines()[0]
        assert header == "setting,algorithm,method,seed,budget,f1"


class TestAggregate:
    def test_single_setting_equals_raw_advantage(self):
        config = small_config(pre_pollution={"mean": 0.15, "cap": 0.5,
                                             "count": 1, "seed": 5})
        result, _ = harness.run_experiment(config)
        summary = harness.aggregate(result)
        cells = result["settings"][0]["algorithms"]["logreg"]["cells"]
        guided = next(c for c in cells if c["method"] == "guided")
        rnd = next(c for c in cells if c["method"] == "random")
        raw = advantage(BudgetCurve.from_lists(guided["points"]),
                        BudgetCurve.from_lists(rnd["points"]), 3)
        agg = summary["advantage_by_algorithm"]["logreg"]["random"]["per_unit"]
        assert np.allclose(agg, raw)

    def test_mae_delegates_to_the_metric(self):
        from cleanguide.metrics import mae
        result, _ = harness.run_experiment(small_config())
        summary = harness.aggregate(result)
        pairs = []
        for entry in result["settings"]:
            for cell in entry["algorithms"]["logreg"]["cells"]:
                if cell["method"] == "guided":
                    pairs.extend(cell["prediction_pairs"])
        if pairs:
            expected = mae([p for p, _ in pairs], [a for _, a in pairs])
            got = summary["mae"]["logreg/missing_values"]["mae"]
            assert got == pytest.approx(expected)

    def test_grouped_by_error_type(self):
        result, _ = harness.run_experiment(small_config())
        summary = harness.aggregate(result)
        assert "missing_values" in summary["advantage_by_error_type"]
