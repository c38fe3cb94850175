"""Config-driven experiment runner: shared pre-pollution settings, one dirty
snapshot per setting, every method replayed from that snapshot."""

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import baselines, estimator, models, recommender
from .metrics import mae, propagate
from .pollution import (ERROR_BY_NAME, apply_pre_pollution, clean_everything,
                        sample_pre_pollution)
from .tabular import (CATEGORICAL, NUMERICAL, TRAIN, Dataset, Feature,
                      load_csv, load_schema, split)

GUIDED = "guided"
RANK_ONCE = "rank_once"
IMPORTANCE = "importance"
RANDOM = "random"
GRADIENT = "gradient"
ORACLE = "oracle"
METHODS = (GUIDED, RANK_ONCE, IMPORTANCE, RANDOM, GRADIENT, ORACLE)


class ConfigError(ValueError):
    pass


def generate_synthetic(spec):
    """Gaussian-blob classification data, fully clean, truth store enabled.

    ``spec``: rows, informative, noise, classes, seed, plus optional
    ``categorical`` (count of binned copies of informative columns) and
    ``separation`` (class-center spread).
    """
    rows = int(spec.get("rows", 1000))
    informative = int(spec.get("informative", 4))
    noise = int(spec.get("noise", 4))
    classes = int(spec.get("classes", 2))
    categorical = int(spec.get("categorical", 0))
    separation = float(spec.get("separation", 2.8))
    seed = int(spec.get("seed", 0))
    if rows < 50 or informative + noise < 2:
        raise ConfigError("need at least 50 rows and 2 features")
    if categorical > informative:
        raise ConfigError("cannot bin more columns than there are informative")

    rng = np.random.default_rng(seed)
    labels = np.arange(rows, dtype=np.int64) % classes
    rng.shuffle(labels)
    # class centers sit `separation` apart in total; informative columns carry
    # decaying shares of it, so the first ones matter most and a cleaning
    # order actually exists. Binary gets a fixed antipodal pair.
    weight_power = float(spec.get("weight_power", 1.0))
    weights = (1.0 + np.arange(informative)) ** -weight_power
    weights = weights / np.linalg.norm(weights)
    if classes == 2:
        centers = np.vstack([-weights, weights]) * separation / 2.0
    else:
        directions = rng.normal(0.0, 1.0, size=(classes, informative))
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        centers = directions / norms * weights * separation / 2.0

    features = []
    for j in range(informative):
        vals = centers[labels, j] + rng.normal(0.0, 1.0, size=rows)
        features.append(Feature(f"inf{j}", NUMERICAL, vals,
                                np.zeros(rows, dtype=bool)))
    for j in range(noise):
        vals = rng.normal(0.0, 1.0, size=rows)
        features.append(Feature(f"noise{j}", NUMERICAL, vals,
                                np.zeros(rows, dtype=bool)))
    for j in range(categorical):
        src = features[j].values
        edges = np.quantile(src, [0.25, 0.5, 0.75])
        codes = np.searchsorted(edges, src).astype(np.int64)
        features.append(Feature(f"cat{j}", CATEGORICAL, codes,
                                np.zeros(rows, dtype=bool),
                                ["q1", "q2", "q3", "q4"]))

    ds = Dataset(features, [str(c) for c in range(classes)], labels)
    ds.enable_truth()
    return ds


@dataclass
class ExperimentConfig:
    dataset: dict
    algorithms: list
    methods: list = field(default_factory=lambda: [GUIDED, RANDOM])
    scenario: dict = field(default_factory=lambda: {
        "kind": "single", "error_type": "missing_values"})
    cost: object = "constant"
    budget: float = 50.0
    pre_pollution: dict = field(default_factory=lambda: {
        "mean": 0.05, "cap": 0.5, "count": 3, "seed": 0})
    seeds: list = field(default_factory=lambda: [0])
    combos: int = estimator.DEFAULT_COMBOS
    search_samples: int = 10
    test_fraction: float = 0.2
    split_seed: int = 7

    @classmethod
    def from_dict(cls, obj):
        cfg = cls(
            dataset=obj["dataset"],
            algorithms=list(obj["algorithms"]),
            methods=list(obj.get("methods", [GUIDED, RANDOM])),
            scenario=dict(obj.get("scenario", {"kind": "single",
                                               "error_type": "missing_values"})),
            cost=obj.get("cost", "constant"),
            budget=float(obj.get("budget", 50)),
            pre_pollution=dict(obj.get("pre_pollution", {})),
            seeds=list(obj.get("seeds", [0])),
            combos=int(obj.get("combos", estimator.DEFAULT_COMBOS)),
            search_samples=int(obj.get("search", {}).get("n_samples", 10)),
            test_fraction=float(obj.get("test_fraction", 0.2)),
            split_seed=int(obj.get("split_seed", 7)),
        )
        cfg.validate()
        return cfg

    def validate(self):
        if self.budget <= 0:
            raise ConfigError("budget must be positive")
        for alg in self.algorithms:
            if alg not in models.ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        kind = self.scenario.get("kind")
        if kind not in ("single", "multi"):
            raise ConfigError("scenario.kind must be 'single' or 'multi'")
        if kind == "single":
            err = self.scenario.get("error_type")
            if err not in ERROR_BY_NAME:
                raise ConfigError(f"unknown error type {err!r}")
        if GRADIENT in self.methods:
            bad = [a for a in self.algorithms
                   if a not in models.GRADIENT_CAPABLE]
            if bad:
                raise ConfigError(
                    f"gradient method cannot run with {bad}")

    def scenario_error(self):
        if self.scenario["kind"] == "single":
            return ERROR_BY_NAME[self.scenario["error_type"]]
        return None

    def cost_model(self):
        if self.cost == "constant":
            return recommender.CostModel()
        if self.cost == "mixed":
            return recommender.CostModel(recommender.MIXED_COSTS)
        if isinstance(self.cost, dict):
            return recommender.CostModel.from_dict(self.cost)
        raise ConfigError(f"unknown cost spec {self.cost!r}")


def load_base_dataset(config):
    ds_spec = config.dataset
    if "synthetic" in ds_spec:
        base = generate_synthetic(ds_spec["synthetic"])
    elif "csv" in ds_spec:
        base = load_csv(ds_spec["csv"], load_schema(ds_spec["schema"]))
        base.enable_truth()
    else:
        raise ConfigError("dataset needs a 'synthetic' or 'csv' entry")
    return split(base, config.test_fraction, config.split_seed)


def _run_method(method, dataset, spec, cost_model, config, seed):
    err = config.scenario_error()
    if method == GUIDED:
        session = recommender.Session(dataset, spec, cost_model, config.budget,
                                      seed=seed, scenario_error=err,
                                      combos=config.combos)
        res = recommender.run_session(session)
        return {"points": res.trajectory.to_lists(), "terminal": res.terminal,
                "prediction_pairs": res.log.pairs(),
                "spent": res.ledger.spent,
                "durations": [r.duration_s for r in res.records]}
    if method == RANK_ONCE:
        res = baselines.cl_session(dataset, spec, cost_model, config.budget,
                                   seed, scenario_error=err,
                                   combos=config.combos)
    elif method == IMPORTANCE:
        res = baselines.fir_session(dataset, spec, cost_model, config.budget,
                                    seed)
    elif method == RANDOM:
        res = baselines.rr_session(dataset, spec, cost_model, config.budget,
                                   seed)
    elif method == GRADIENT:
        res = baselines.ac_session(dataset, spec, cost_model, config.budget,
                                   seed)
    elif method == ORACLE:
        res = baselines.oracle_session(dataset, spec, cost_model,
                                       config.budget, seed)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return {"points": res.curve.to_lists(), "terminal": res.terminal,
            "spent": res.ledger.spent}


def run_experiment(config):
    """Run every (setting, algorithm, method, seed) cell from a shared snapshot.

    Returns (result dict, timings dict). The result is a pure function of the
    config; wall-clock numbers live only in the timings sidecar.
    """
    base = load_base_dataset(config)
    pp = config.pre_pollution
    count = int(pp.get("count", 3))
    cost_model = config.cost_model()
    multi = config.scenario["kind"] == "multi"

    settings = []
    timings = {"cells": {}}
    for i in range(count):
        setting = sample_pre_pollution(
            base.features, float(pp.get("mean", 0.05)),
            float(pp.get("cap", 0.5)), multi,
            seed=int(pp.get("seed", 0)) + i,
            error_type=config.scenario_error())
        work = base.copy()
        apply_pre_pollution(work, setting)
        snap = work.snapshot()

        entry = {"setting": json.loads(setting.to_json()), "algorithms": {}}
        for alg in config.algorithms:
            work.restore(snap)
            search = models.random_search(
                alg, models.TableView(work, work.split_rows(TRAIN)),
                n_samples=config.search_samples,
                seed=int(pp.get("seed", 0)) * 1000 + i)
            spec = search.best
            dirty_f1 = estimator.measure_current_f1(work, spec)

            ref = work.copy()
            clean_everything(ref)
            clean_f1 = estimator.measure_current_f1(ref, spec)

            alg_entry = {"spec": spec.to_dict(), "dirty_f1": dirty_f1,
                         "clean_f1": clean_f1, "cells": []}
            for method in config.methods:
                for seed in config.seeds:
                    work.restore(snap)
                    started = time.perf_counter()
                    cell = {"method": method, "seed": seed}
                    try:
                        cell.update(_run_method(method, work, spec, cost_model,
                                                config, seed))
                    except Exception as exc:  # isolate the failing cell
                        cell["error"] = f"{type(exc).__name__}: {exc}"
                    elapsed = time.perf_counter() - started
                    timings["cells"][f"s{i}/{alg}/{method}/{seed}"] = elapsed
                    durations = cell.pop("durations", None)
                    if durations is not None:
                        timings["cells"][
                            f"s{i}/{alg}/{method}/{seed}/iterations"] = durations
                    alg_entry["cells"].append(cell)
            entry["algorithms"][alg] = alg_entry
        settings.append(entry)

    result = {"config": config.__dict__, "settings": settings}
    return result, timings


def result_to_json(result):
    return json.dumps(result, indent=2, sort_keys=True)


def save_result(result, timings, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "results.json"), "w", encoding="utf-8") as fh:
        fh.write(result_to_json(result))
    with open(os.path.join(out_dir, "timings.json"), "w", encoding="utf-8") as fh:
        json.dump(timings, fh, indent=2, sort_keys=True)
    rows = ["setting,algorithm,method,seed,budget,f1"]
    for i, entry in enumerate(result["settings"]):
        for alg, alg_entry in sorted(entry["algorithms"].items()):
            for cell in alg_entry["cells"]:
                for budget, f1 in cell.get("points", []):
                    rows.append(f"{i},{alg},{cell['method']},{cell['seed']},"
                                f"{budget},{f1}")
    with open(os.path.join(out_dir, "curves.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")


def _error_group(result):
    scenario = result["config"]["scenario"]
    return scenario.get("error_type") if scenario.get("kind") == "single" \
        else "multi"


def aggregate(results):
    """Per-budget-unit mean advantage of the guided method over each contender,
    grouped by algorithm and by error type, plus prediction MAE."""
    if isinstance(results, dict):
        results = [results]
    if not results:
        raise ValueError("nothing to aggregate")
    by_alg = {}
    by_err = {}
    mae_groups = {}
    for result in results:
        budget = int(np.floor(result["config"]["budget"]))
        err_group = _error_group(result)
        for entry in result["settings"]:
            for alg, alg_entry in entry["algorithms"].items():
                cells = [c for c in alg_entry["cells"] if "points" in c]
                guided = {c["seed"]: c for c in cells
                          if c["method"] == GUIDED}
                for cell in cells:
                    if cell["method"] == GUIDED:
                        pairs = cell.get("prediction_pairs", [])
                        if pairs:
                            key = (alg, err_group)
                            mae_groups.setdefault(key, []).extend(pairs)
                        continue
                    ref = guided.get(cell["seed"])
                    if ref is None:
                        continue
                    adv = (propagate(_as_curve(ref), budget)
                           - propagate(_as_curve(cell), budget))
                    by_alg.setdefault(alg, {}).setdefault(
                        cell["method"], []).append(adv)
                    by_err.setdefault(err_group, {}).setdefault(
                        cell["method"], []).append(adv)

    def summarize(groups):
        out = {}
        for gkey, methods in sorted(groups.items()):
            out[gkey] = {}
            for method, series in sorted(methods.items()):
                mean = np.mean(series, axis=0)
                out[gkey][method] = {
                    "per_unit": [float(v) for v in mean],
                    "mean": float(np.mean(mean)),
                    "final": float(mean[-1]),
                }
        return out

    mae_summary = {}
    for (alg, err_group), pairs in sorted(mae_groups.items()):
        preds = [p for p, _ in pairs]
        acts = [a for _, a in pairs]
        mae_summary[f"{alg}/{err_group}"] = {"mae": mae(preds, acts),
                                             "pairs": len(pairs)}

    return {"advantage_by_algorithm": summarize(by_alg),
            "advantage_by_error_type": summarize(by_err),
            "mae": mae_summary}


def _as_curve(cell):
    from .metrics import BudgetCurve
    return BudgetCurve.from_lists(cell["points"])
