"""JSON round-tripping for datasets and sessions (service persistence)."""

import numpy as np

from .estimator import DiscrepancyLog
from .metrics import BudgetCurve
from .models import ModelSpec
from .pollution import ERROR_BY_NAME
from .recommender import (Attempt, BudgetLedger, CleaningBuffer, CostModel,
                          IterationRecord, LedgerEntry, Session)
from .tabular import CATEGORICAL, Dataset, Feature


def dataset_to_dict(ds):
    out = {
        "classes": ds.classes,
        "labels": ds.labels.tolist(),
        "positive_label": ds.positive_label,
        "features": [{
            "name": f.name, "kind": f.kind,
            "values": f.values.tolist(),
            "missing": f.missing.tolist(),
            "categories": f.categories,
        } for f in ds.features],
        "provenance": ds.provenance.tolist(),
        "error_marks": ds.error_marks.tolist(),
        "train_idx": None if ds.train_idx is None else ds.train_idx.tolist(),
        "test_idx": None if ds.test_idx is None else ds.test_idx.tolist(),
    }
    if ds.truth_values is not None:
        out["truth_values"] = [v.tolist() for v in ds.truth_values]
        out["truth_missing"] = [m.tolist() for m in ds.truth_missing]
    return out


def dataset_from_dict(obj):
    features = []
    for f in obj["features"]:
        dtype = np.int64 if f["kind"] == CATEGORICAL else np.float64
        features.append(Feature(f["name"], f["kind"],
                                np.asarray(f["values"], dtype=dtype),
                                np.asarray(f["missing"], dtype=bool),
                                list(f.get("categories", []))))
    ds = Dataset(features, obj["classes"],
                 np.asarray(obj["labels"], dtype=np.int64),
                 obj.get("positive_label"))
    ds.provenance = np.asarray(obj["provenance"], dtype=np.int8)
    ds.error_marks = np.asarray(obj["error_marks"], dtype=np.uint8)
    if obj.get("train_idx") is not None:
        ds.train_idx = np.asarray(obj["train_idx"], dtype=np.int64)
        ds.test_idx = np.asarray(obj["test_idx"], dtype=np.int64)
    if "truth_values" in obj:
        ds.truth_values = [np.asarray(v, dtype=f.values.dtype)
                           for v, f in zip(obj["truth_values"], features)]
        ds.truth_missing = [np.asarray(m, dtype=bool)
                            for m in obj["truth_missing"]]
    return ds


def session_to_dict(s):
    return {
        "dataset": dataset_to_dict(s.dataset),
        "model_spec": s.model_spec.to_dict(),
        "cost_model": s.cost_model.to_dict(),
        "budget": s.ledger.total,
        "ledger": s.ledger.to_rows(),
        "log": s.log.to_dict(),
        "buffer": s.buffer.to_dict(),
        "seed": s.seed,
        "scenario_error": None if s.scenario_error is None
        else s.scenario_error.name,
        "combos": s.combos,
        "interactive": s.interactive,
        "steps_done": [[fi, err, n] for (fi, err), n in s.steps_done.items()],
        "best_clean": {str(fi): list(v) for fi, v in s.best_clean.items()},
        "fully_clean": sorted(s.fully_clean),
        "exhausted": [[fi, err] for fi, err in sorted(s.exhausted)],
        "iteration": s.iteration,
        "stall_count": s.stall_count,
        "accepted_steps": s.accepted_steps,
        "buffer_failed_at": [[fi, err, v] for (fi, err), v
                             in s.buffer_failed_at.items()],
        "records": [r.to_dict() for r in s.records],
        "terminal": s.terminal,
        "current_f1": s.current_f1,
        "trajectory": s.trajectory.to_lists(),
    }


def session_from_dict(obj):
    s = object.__new__(Session)
    s.dataset = dataset_from_dict(obj["dataset"])
    s.model_spec = ModelSpec.from_dict(obj["model_spec"])
    s.cost_model = CostModel.from_dict(obj["cost_model"])
    s.ledger = BudgetLedger(obj["budget"])
    s.ledger.entries = [LedgerEntry(int(i), int(fi), err, float(c), bool(a))
                        for i, fi, err, c, a in obj["ledger"]]
    s.log = DiscrepancyLog.from_dict(obj["log"])
    s.buffer = CleaningBuffer.from_dict(obj["buffer"])
    s.seed = int(obj["seed"])
    name = obj.get("scenario_error")
    s.scenario_error = None if name is None else ERROR_BY_NAME[name]
    s.combos = int(obj["combos"])
    s.interactive = bool(obj["interactive"])
    s.steps_done = {(int(fi), err): int(n)
                    for fi, err, n in obj["steps_done"]}
    s.best_clean = {int(fi): (float(v[0]), v[1])
                    for fi, v in obj["best_clean"].items()}
    s.fully_clean = set(int(fi) for fi in obj["fully_clean"])
    s.exhausted = set((int(fi), err) for fi, err in obj["exhausted"])
    s.iteration = int(obj["iteration"])
    s.stall_count = int(obj.get("stall_count", 0))
    s.accepted_steps = int(obj.get("accepted_steps", 0))
    s.buffer_failed_at = {(int(fi), err): int(v)
                          for fi, err, v in obj.get("buffer_failed_at", [])}
    s.records = [_record_from_dict(r) for r in obj["records"]]
    s.terminal = obj.get("terminal")
    s.current_f1 = float(obj["current_f1"])
    s.trajectory = BudgetCurve.from_lists(obj["trajectory"])
    return s


def _record_from_dict(obj):
    rec = IterationRecord(int(obj["index"]))
    rec.accepted = bool(obj["accepted"])
    rec.duration_s = float(obj.get("duration_s", 0.0))
    rec.attempts = [Attempt(**a) for a in obj["attempts"]]
    return rec
