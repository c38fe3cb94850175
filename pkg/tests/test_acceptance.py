"""Acceptance suite: one test per criterion, each printing a pass/fail line.

The statistical criteria run on a frozen synthetic benchmark (2,000 rows,
4 informative + 4 noise features, binary labels, exponential pre-pollution
with mean 0.10) and are exactly reproducible: every number below is a pure
function of the seeds in this file.
"""

import time

import numpy as np
import pytest
from scipy import stats

from cleanguide import baselines, estimator, harness, models, pollution, \
    recommender
from cleanguide.estimator import AccuracySamples, fit_predict
from cleanguide.metrics import BINARY_POSITIVE, MACRO, f1, mae, propagate
from cleanguide.models import ModelSpec, TableView, fit, per_record_loss
from cleanguide.pollution import MISSING_VALUES, pollute, sample_pre_pollution
from cleanguide.recommender import (Constant, CostModel, Linear, OneShot,
                                    Session, run_session, score)
from cleanguide.tabular import TRAIN, split

from conftest import adversarial_dataset, knn_ladder_dataset, make_dataset

GENERATOR = {"rows": 2000, "informative": 4, "noise": 4, "classes": 2,
             "seed": 1, "weight_power": 3.0, "separation": 3.2}
MODEL = ModelSpec("logreg", {"l2": 1e-3})
BUDGET = 20
SETTING_SEEDS = [100, 101, 102, 103, 104]
SESSION_SEEDS = [0, 1, 2]


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def benchmark_base():
    base = harness.generate_synthetic(GENERATOR)
    return split(base, 0.3, 7)


@pytest.fixture(scope="module")
def advantage_runs():
    """Guided vs random over 5 settings x 3 seeds on the frozen benchmark."""
    started = time.perf_counter()
    base = benchmark_base()
    adv_rows = []
    prediction_pairs = []
    for setting_seed in SETTING_SEEDS:
        setting = sample_pre_pollution(base.features, 0.10, 0.5, False,
                                       seed=setting_seed,
                                       error_type=MISSING_VALUES)
        work = base.copy()
        pollution.apply_pre_pollution(work, setting)
        snap = work.snapshot()
        for seed in SESSION_SEEDS:
            work.restore(snap)
            guided = run_session(Session(work, MODEL, CostModel(), BUDGET,
                                         seed=seed,
                                         scenario_error=MISSING_VALUES))
            work.restore(snap)
            random = baselines.rr_session(work, MODEL, CostModel(), BUDGET,
                                          seed=seed)
            adv_rows.append(propagate(guided.trajectory, BUDGET)
                            - propagate(random.curve, BUDGET))
            prediction_pairs.extend(guided.log.pairs())
    return np.vstack(adv_rows), prediction_pairs, time.perf_counter() - started


def test_oracle_correctness():
    started = time.perf_counter()
    base = benchmark_base()
    setting = sample_pre_pollution(base.features, 0.10, 0.5, False,
                                   seed=SETTING_SEEDS[0],
                                   error_type=MISSING_VALUES)
    pollution.apply_pre_pollution(base, setting)
    result = baselines.oracle_session(base, MODEL, CostModel(), 12, seed=0)
    iterations = result.extra["evaluations"]
    assert iterations, "the oracle never committed a step"
    for record in iterations:
        best = max(e["ratio"] for e in record["evaluated"])
        chosen = next(e for e in record["evaluated"]
                      if e["feature"] == record["committed"]["feature"]
                      and e["error_type"] == record["committed"]["error_type"])
        assert chosen["ratio"] == best, f"iteration {record['iteration']}"
    elapsed = time.perf_counter() - started
    report("oracle-correctness", elapsed <= 300,
           f"{len(iterations)} iterations all committed the max gain/cost "
           f"candidate ({elapsed:.1f}s <= 300s)")


def test_guided_beats_random(advantage_runs):
    adv, _, elapsed = advantage_runs
    per_unit_mean = float(adv.mean())
    final_mean = float(adv[:, -1].mean())
    ok = per_unit_mean >= 0.0 and final_mean >= 0.01 and elapsed <= 1200
    report("guided-beats-random", ok,
           f"mean per-unit advantage {per_unit_mean:+.4f} >= 0, "
           f"mean final advantage {final_mean:+.4f} >= +0.01 "
           f"({adv.shape[0]} runs, {elapsed:.0f}s <= 1200s)")


def test_cost_model_closed_forms():
    spec = ModelSpec("knn", {"k": 1})
    spends = {}
    for name, kind, expected in [
            ("constant", Constant(1.0), 4.0),
            ("one_shot", OneShot(2.0, 0.0), 2.0),
            ("linear", Linear(1.0, 1.0), 10.0)]:
        ds = knn_ladder_dataset(4)
        result = run_session(Session(ds, spec, CostModel(default=kind), 50,
                                     seed=5, scenario_error=MISSING_VALUES))
        accepted = sum(1 for e in result.ledger.entries if e.accepted)
        assert accepted == 4, f"{name}: expected 4 accepted steps"
        assert result.ledger.spent == expected, name
        spends[name] = result.ledger.spent
    report("cost-model-closed-forms", True,
           f"4 accepted steps spent exactly {spends['constant']:.0f} / "
           f"{spends['one_shot']:.0f} / {spends['linear']:.0f} under "
           "constant(1) / one-shot(2,0) / linear(1,1)")


def test_bayesian_regression_oracle():
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 12))
        x = rng.integers(0, 3, size=n) * 0.01
        while len(np.unique(x)) < 2:
            x = rng.integers(0, 3, size=n) * 0.01
        y = rng.uniform(0.2, 0.95, size=n)
        pred = fit_predict(AccuracySamples(
            0, MISSING_VALUES, [(float(a), 1, float(b)) for a, b in zip(x, y)],
            []))
        # direct dense closed form, in cleaning-step covariate units
        design = np.column_stack([np.ones(n), x / 0.01])
        lam_n = estimator.PRIOR_PRECISION * np.eye(2) + design.T @ design
        lam_inv = np.linalg.inv(lam_n)
        coef = lam_inv @ design.T @ y
        a_n = estimator.PRIOR_A + n / 2.0
        b_n = estimator.PRIOR_B + 0.5 * (y @ y - coef @ lam_n @ coef)
        row = np.array([1.0, -1.0])
        mean = row @ coef
        width = 2.0 * stats.t.ppf(0.975, 2 * a_n) \
            * np.sqrt(b_n / a_n * (1.0 + row @ lam_inv @ row))
        worst = max(worst,
                    np.abs(pred.posterior.coef_mean - coef).max(),
                    np.abs(pred.posterior.cov_scale - lam_inv).max(),
                    abs(pred.posterior.a - a_n), abs(pred.posterior.b - b_n),
                    abs(pred.predicted_f1 - mean),
                    abs(pred.uncertainty - width))
    line = fit_predict(AccuracySamples(
        0, MISSING_VALUES,
        [(0.0, 0, 0.80), (0.01, 1, 0.79), (0.02, 1, 0.78)], []))
    line_err = abs(line.predicted_f1 - 0.81)
    ok = worst <= 1e-8 and line_err <= 1e-6
    report("bayesian-regression-oracle", ok,
           f"posterior max deviation {worst:.2e} <= 1e-8, noiseless-line "
           f"extrapolation error {line_err:.2e} <= 1e-6 (100 instances)")


def test_estimator_mae(advantage_runs):
    _, pairs, _ = advantage_runs
    value = mae([p for p, _ in pairs], [a for _, a in pairs])
    report("estimator-mae", value <= 0.08,
           f"MAE of {len(pairs)} executed predictions {value:.4f} <= 0.08")


def test_worked_example_fidelity():
    got = score(estimator.Prediction(0, MISSING_VALUES, 0.88, 0.02), 1.0)
    score_ok = abs(got - 0.86) <= 1e-12

    n = 1250  # 0.2 test fraction leaves a 1,000-row train split
    ds = make_dataset(numeric={"income": list(range(n))},
                      labels=[0, 1] * (n // 2), seed=5)
    assert len(ds.train_idx) == 1000
    state = pollute(ds, "income", MISSING_VALUES, 0.01, seed=3)
    touched = len(state.touched[TRAIN])
    report("worked-example-fidelity", score_ok and touched == 10,
           f"score((0.88, 0.02), cost 1) = {got} and a 1% step on a "
           f"1,000-row split touched {touched} cells")


def test_revert_buffer_protocol():
    ds = adversarial_dataset()
    session = Session(ds, ModelSpec("logreg", {"l2": 1e-3}), CostModel(), 6,
                      seed=1, scenario_error=MISSING_VALUES)
    before = ds.snapshot()
    first = session.run_iteration()
    rejected = first.attempts[0]
    after = ds.snapshot()
    identical = all(
        np.array_equal(a, b) for a, b in zip(before.values, after.values)
    ) and all(
        np.array_equal(a, b) for a, b in zip(before.missing, after.missing)
    ) and np.array_equal(before.provenance, after.provenance) \
        and np.array_equal(before.error_marks, after.error_marks)
    buffered = session.buffer.has(0, MISSING_VALUES)
    second = session.run_iteration()
    reapplied = [a for a in second.attempts if a.from_buffer]
    zero_cost = bool(reapplied) and reapplied[0].cost == 0.0
    ok = (not rejected.accepted) and identical and buffered and zero_cost
    report("revert-buffer-protocol", ok,
           "rejected step reverted cell-identically, buffered the cleaned "
           "values, and re-applied them later at zero cost")


def test_gradient_checks():
    worst_by_alg = {}
    for algorithm in models.GRADIENT_CAPABLE:
        rng = np.random.default_rng(8)
        n = 80
        labels = np.arange(n) % 2
        x0 = np.where(labels == 1, 3.0, -3.0) + rng.normal(0, 0.4, n)
        ds = make_dataset(numeric={"x0": x0, "x1": rng.normal(0, 1, n)},
                          labels=labels, seed=1)
        model = fit(ModelSpec(algorithm, seed=3),
                    TableView(ds, ds.split_rows(TRAIN)))
        h = 1e-6
        worst = 0.0
        check_rng = np.random.default_rng(12)
        for _ in range(100):
            x = check_rng.normal(0, 1, size=model.weights.shape[1])
            y = int(check_rng.integers(0, 2))
            analytic = model.record_gradient(x, y)
            params = model.params_flat
            numeric = np.empty_like(params)
            for j in range(len(params)):
                up = params.copy()
                up[j] += h
                down = params.copy()
                down[j] -= h
                numeric[j] = (per_record_loss(model, x, y, up)
                              - per_record_loss(model, x, y, down)) / (2 * h)
            scale = max(1.0, np.abs(analytic).max())
            worst = max(worst, np.abs(analytic - numeric).max() / scale)
        worst_by_alg[algorithm] = worst
        assert worst <= 1e-5, f"{algorithm}: {worst:.2e}"
    detail = ", ".join(f"{a} {v:.1e}" for a, v in worst_by_alg.items())
    report("gradient-checks", True,
           f"max relative error vs central differences (100 instances each): "
           f"{detail}, all <= 1e-5")


F1_CASES = [
    ([1, 1], [1, 1], BINARY_POSITIVE, 1.0),
    ([1, 0, 1, 0], [1, 1, 0, 0], BINARY_POSITIVE, 0.5),
    ([1, 1, 1], [0, 0, 0], BINARY_POSITIVE, 0.0),
    ([0, 0], [0, 0], BINARY_POSITIVE, 0.0),
    ([1, 1, 1, 0], [1, 1, 0, 1], BINARY_POSITIVE, 2.0 / 3.0),
    ([0, 1, 0, 1, 1], [0, 1, 1, 1, 0], BINARY_POSITIVE, 2.0 / 3.0),
    ([1, 0, 0, 0, 0], [1, 1, 1, 1, 1], BINARY_POSITIVE, 1.0 / 3.0),
    ([0, 0, 0, 1], [0, 0, 0, 1], BINARY_POSITIVE, 1.0),
    ([1, 0, 1, 0, 1, 0, 1, 0], [1, 0, 0, 1, 1, 0, 0, 1], BINARY_POSITIVE, 0.5),
    ([1, 1, 0, 0, 1], [0, 1, 1, 0, 1], BINARY_POSITIVE, 2.0 / 3.0),
    ([0, 1, 1, 1, 1, 1], [1, 1, 1, 1, 1, 0], BINARY_POSITIVE, 0.8),
    ([1], [1], BINARY_POSITIVE, 1.0),
    ([0], [1], BINARY_POSITIVE, 0.0),
    ([0, 1, 2], [0, 1, 2], MACRO, 1.0),
    ([0, 0, 1, 1, 2, 2], [0, 1, 1, 2, 2, 0], MACRO, 0.5),
    ([0, 1, 2, 0, 1, 2], [0, 0, 0, 0, 0, 0], MACRO, 1.0 / 6.0),
    ([2, 2, 1, 0], [2, 1, 1, 0], MACRO, 7.0 / 9.0),
    ([0, 1, 1, 2], [0, 2, 1, 1], MACRO, 0.5),
    ([1, 1, 1, 1], [1, 1, 1, 1], BINARY_POSITIVE, 1.0),
    ([0, 1, 0, 1], [1, 0, 1, 0], BINARY_POSITIVE, 0.0),
]


def test_f1_and_shapley_oracles():
    for y_true, y_pred, avg, expected in F1_CASES:
        kwargs = {"n_classes": 3} if avg == MACRO else {}
        got = f1(y_true, y_pred, avg, **kwargs)
        assert got == pytest.approx(expected), (y_true, y_pred)

    rng = np.random.default_rng(6)
    n = 120
    labels = np.array([0, 1] * (n // 2))
    strong = np.where(labels == 1, 2.0, -2.0) + rng.normal(0, 0.6, n)
    weak = np.where(labels == 1, 0.4, -0.4) + rng.normal(0, 1.0, n)
    ds = make_dataset(numeric={"strong": strong, "weak": weak},
                      labels=labels, seed=2, truth=True)
    spec = ModelSpec("linreg")
    sampled = dict(baselines.shapley_importance(spec, ds, n_permutations=128,
                                                seed=9).entries)
    view = TableView(ds, ds.split_rows(TRAIN))
    model = fit(spec, view)
    x = model.pipeline.transform(view)
    w = model.weights[0]
    mean_b = x.mean(axis=0)
    worst = 0.0
    for fi in range(2):
        exact = float(np.mean(np.abs(w[fi] * (x[:, fi] - mean_b[fi]))))
        worst = max(worst, abs(sampled[fi] - exact))
    report("f1-shapley-oracles", worst <= 0.01,
           f"20 confusion-matrix cases exact; sampled Shapley within "
           f"{worst:.4f} <= 0.01 of the exact 2-feature enumeration")


def test_protocol_parity_and_reproducibility():
    config = harness.ExperimentConfig.from_dict({
        "dataset": {"synthetic": {"rows": 400, "informative": 2, "noise": 2,
                                  "classes": 2, "seed": 3}},
        "algorithms": ["logreg"],
        "methods": ["guided", "random", "importance"],
        "scenario": {"kind": "single", "error_type": "missing_values"},
        "budget": 3,
        "pre_pollution": {"mean": 0.15, "cap": 0.5, "count": 2, "seed": 5},
        "seeds": [0],
        "combos": 1,
        "search": {"n_samples": 2},
    })
    a, _ = harness.run_experiment(config)
    b, _ = harness.run_experiment(config)
    bitwise = harness.result_to_json(a) == harness.result_to_json(b)

    # every method in a setting starts from the byte-identical snapshot
    base = harness.load_base_dataset(config)
    setting = sample_pre_pollution(base.features, 0.15, 0.5, False, seed=5,
                                   error_type=MISSING_VALUES)
    work = base.copy()
    pollution.apply_pre_pollution(work, setting)
    snap = work.snapshot()

    def state_bytes(ds):
        return b"".join([f.values.tobytes() + f.missing.tobytes()
                         for f in ds.features]) \
            + ds.provenance.tobytes() + ds.error_marks.tobytes()

    work.restore(snap)
    start_a = state_bytes(work)
    run_session(Session(work, MODEL, CostModel(), 2, seed=0,
                        scenario_error=MISSING_VALUES))
    work.restore(snap)
    start_b = state_bytes(work)
    baselines.rr_session(work, MODEL, CostModel(), 2, seed=0)
    work.restore(snap)
    start_c = state_bytes(work)
    snapshots_equal = start_a == start_b == start_c

    shared_start = all(
        cell["points"][0][1] == pytest.approx(alg_entry["dirty_f1"])
        for entry in a["settings"]
        for alg_entry in entry["algorithms"].values()
        for cell in alg_entry["cells"] if "points" in cell)

    ok = bitwise and snapshots_equal and shared_start
    report("protocol-parity-reproducibility", ok,
           "identical config reproduced bitwise-identical results; every "
           "method started from the byte-identical dirty snapshot")
