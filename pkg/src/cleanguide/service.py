"""HTTP session API for driving cleaning campaigns interactively.

Sessions persist as JSON files in a data directory and survive restarts.
Each session has one logical writer: mutating calls serialize on a lock and
may carry an optimistic state-version token; stale tokens get 409.
"""

import json
import os
import threading
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import harness, models, persist, recommender
from .pollution import ERROR_BY_NAME, sample_pre_pollution, apply_pre_pollution
from .recommender import rank
from .tabular import (CATEGORICAL, NUMERICAL, TRAIN, TEST, ParseError,
                      SchemaError, loads_csv, split)

MAX_CSV_BYTES = 4 * 1024 * 1024


class NewSession(BaseModel):
    mode: str = "simulated"
    csv_text: str | None = None
    schema_: dict | None = None
    synthetic: dict | None = None
    pre_pollution: dict | None = None
    algorithm: str = "logreg"
    hyperparameters: dict | None = None
    search: bool = False
    cost: str | dict = "constant"
    budget: float = 50
    seed: int = 0
    scenario: dict | None = None
    test_fraction: float = 0.2
    split_seed: int = 7
    combos: int = 3

    model_config = {"populate_by_name": True,
                    "alias_generator": lambda f: "schema" if f == "schema_" else f}


class CleaningRequest(BaseModel):
    feature: str | None = None
    error_type: str | None = None
    cleaned_cells: list | None = None
    mark_fully_clean: bool = False
    version: int | None = None


class SessionStore:
    def __init__(self, data_dir):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self._live = {}
        self._guard = threading.Lock()

    def _path(self, sid):
        return os.path.join(self.data_dir, f"{sid}.json")

    def entry(self, sid):
        with self._guard:
            if sid in self._live:
                return self._live[sid]
        path = self._path(sid)
        if not os.path.exists(path):
            raise HTTPException(404, f"unknown session {sid}")
        with open(path, "r", encoding="utf-8") as fh:
            blob = json.load(fh)
        entry = {
            "session": persist.session_from_dict(blob["session"]),
            "version": blob["version"],
            "audit": blob.get("audit", []),
            "attempted": set(tuple(p) for p in blob.get("attempted", [])),
            "lock": threading.Lock(),
            "eval_cache": {},
        }
        with self._guard:
            return self._live.setdefault(sid, entry)

    def create(self, session):
        sid = uuid.uuid4().hex[:12]
        entry = {"session": session, "version": 0, "audit": [],
                 "attempted": set(), "lock": threading.Lock(),
                 "eval_cache": {}}
        with self._guard:
            self._live[sid] = entry
        self.save(sid)
        return sid

    def save(self, sid):
        entry = self._live[sid]
        blob = {"session": persist.session_to_dict(entry["session"]),
                "version": entry["version"],
                "audit": entry["audit"],
                "attempted": [list(p) for p in entry["attempted"]]}
        tmp = self._path(sid) + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(blob, fh)
        os.replace(tmp, self._path(sid))


def _build_dataset(req):
    if req.synthetic is not None:
        ds = harness.generate_synthetic(req.synthetic)
    elif req.csv_text is not None:
        if req.schema_ is None:
            raise HTTPException(400, "csv upload needs a schema")
        if len(req.csv_text.encode("utf-8")) > MAX_CSV_BYTES:
            raise HTTPException(413, "csv exceeds the size limit")
        try:
            ds = loads_csv(req.csv_text, req.schema_)
        except (ParseError, SchemaError) as exc:
            raise HTTPException(400, str(exc)) from exc
    else:
        raise HTTPException(400, "need csv_text or a synthetic spec")
    try:
        split(ds, req.test_fraction, req.split_seed)
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from exc

    if req.mode == "simulated":
        if ds.truth_values is None:
            if (ds.provenance != 0).any():
                raise HTTPException(
                    400, "simulated mode needs clean input (or synthetic data)")
            ds.enable_truth()
        if req.pre_pollution:
            pp = req.pre_pollution
            err = None
            multi = pp.get("multi_error", False)
            if not multi:
                name = pp.get("error_type", "missing_values")
                if name not in ERROR_BY_NAME:
                    raise HTTPException(400, f"unknown error type {name!r}")
                err = ERROR_BY_NAME[name]
            setting = sample_pre_pollution(
                ds.features, float(pp.get("mean", 0.05)),
                float(pp.get("cap", 0.5)), multi,
                seed=int(pp.get("seed", 0)), error_type=err)
            apply_pre_pollution(ds, setting)
    return ds


def _scenario_error(req):
    scenario = req.scenario or {"kind": "single", "error_type": "missing_values"}
    if scenario.get("kind") == "multi":
        return None
    name = scenario.get("error_type", "missing_values")
    if name not in ERROR_BY_NAME:
        raise HTTPException(400, f"unknown error type {name!r}")
    return ERROR_BY_NAME[name]


def _cost_model(cost):
    if cost == "constant":
        return recommender.CostModel()
    if cost == "mixed":
        return recommender.CostModel(recommender.MIXED_COSTS)
    if isinstance(cost, dict):
        return recommender.CostModel.from_dict(cost)
    raise HTTPException(400, f"unknown cost spec {cost!r}")


def _candidate_payload(session, cand):
    return {
        "feature": session.dataset.features[cand.feature].name,
        "error_type": cand.error_type.name,
        "score": None if np.isinf(cand.score) else cand.score,
        "predicted_f1": cand.prediction.predicted_f1,
        "uncertainty": cand.prediction.uncertainty,
        "cost": session.next_cost(cand.feature, cand.error_type),
        "priority_cells": {
            split_name: cand.samples.priority_cells(split_name).tolist()
            for split_name in (TRAIN, TEST)} if cand.samples else {},
    }


def _evaluation(entry):
    session = entry["session"]
    cached = entry["eval_cache"].get(entry["version"])
    if cached is None:
        cached = session.evaluate()
        entry["eval_cache"] = {entry["version"]: cached}
    return cached


def create_app(data_dir=None, ui_dir=None):
    data_dir = data_dir or os.environ.get("CLEANGUIDE_DATA", "./sessions")
    store = SessionStore(data_dir)
    app = FastAPI(title="cleanguide session service", version="0.1.0")
    app.state.store = store
    # the cockpit may be served from another origin (or file://)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.post("/sessions", status_code=201)
    def create_session(req: NewSession):
        if req.budget < 0:
            raise HTTPException(400, "budget must not be negative")
        if req.mode not in ("simulated", "interactive"):
            raise HTTPException(400, "mode must be simulated or interactive")
        if req.algorithm not in models.ALGORITHMS:
            raise HTTPException(400, f"unknown algorithm {req.algorithm!r}")
        dataset = _build_dataset(req)
        if req.search:
            result = models.random_search(
                req.algorithm,
                models.TableView(dataset, dataset.split_rows(TRAIN)),
                seed=req.seed)
            spec = result.best
        else:
            spec = models.ModelSpec(req.algorithm, req.hyperparameters or {},
                                    seed=req.seed)
        try:
            session = recommender.Session(
                dataset, spec, _cost_model(req.cost), req.budget,
                seed=req.seed, scenario_error=_scenario_error(req),
                combos=req.combos, interactive=req.mode == "interactive")
        except models.DegenerateLabelsError as exc:
            raise HTTPException(400, str(exc)) from exc
        session.check_terminal()
        sid = store.create(session)
        entry = store.entry(sid)
        entry["audit"].append({"event": "created", "mode": req.mode})
        store.save(sid)
        return {"session_id": sid, "dirty_f1": session.current_f1,
                "version": 0, "terminal": session.terminal}

    @app.get("/sessions/{sid}/recommendation")
    def recommendation(sid: str):
        entry = store.entry(sid)
        session = entry["session"]
        if session.check_terminal() is not None:
            raise HTTPException(409, f"session is terminal: {session.terminal}")
        candidates = _evaluation(entry)
        ranked = rank(candidates, session.current_f1)
        ranked = [c for c in ranked
                  if (c.feature, c.error_type.name) not in entry["attempted"]]
        top = ranked[0] if ranked else session.fallback_pick(
            candidates, entry["attempted"])
        if top is None:
            raise HTTPException(409, "no affordable candidate remains")
        payload = _candidate_payload(session, top)
        payload.update({
            "fallback": not ranked,
            "alternatives": [_candidate_payload(session, c)
                             for c in ranked[1:6]],
            "current_f1": session.current_f1,
            "remaining_budget": session.ledger.remaining,
            "version": entry["version"],
        })
        return payload

    @app.post("/sessions/{sid}/cleaning")
    def cleaning(sid: str, req: CleaningRequest):
        entry = store.entry(sid)
        with entry["lock"]:
            session = entry["session"]
            if req.version is not None and req.version != entry["version"]:
                raise HTTPException(
                    409, f"stale version {req.version}; "
                         f"current is {entry['version']}")
            if req.mark_fully_clean:
                if req.feature is None:
                    raise HTTPException(422, "mark_fully_clean needs a feature")
                fi = _feature_index(session, req.feature)
                session.fully_clean.add(fi)
                entry["version"] += 1
                entry["audit"].append({"event": "marked_clean",
                                       "feature": req.feature})
                session.check_terminal()
                store.save(sid)
                return _cleaning_response(entry, accepted=None)
            if session.check_terminal() is not None:
                raise HTTPException(409,
                                    f"session is terminal: {session.terminal}")
            if not session.interactive:
                record = session.run_iteration()
                session.check_terminal()
                entry["version"] += 1
                entry["audit"].append({"event": "iteration",
                                       "accepted": record.accepted})
                store.save(sid)
                return _cleaning_response(entry, accepted=record.accepted,
                                          attempts=record.attempts)
            return _interactive_cleaning(store, entry, sid, req)

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.get("/sessions/{sid}/history")
    def history(sid: str):
        entry = store.entry(sid)
        session = entry["session"]
        return {
            "trajectory": session.trajectory.to_lists(),
            "ledger": {"total": session.ledger.total,
                       "spent": session.ledger.spent,
                       "entries": session.ledger.to_rows()},
            "discrepancy_log": session.log.to_dict(),
            "iterations": [r.to_dict() for r in session.records],
            "current_f1": session.current_f1,
            "terminal": session.terminal,
            "version": entry["version"],
            "features": [{"name": f.name, "kind": f.kind,
                          "fully_clean": fi in session.fully_clean}
                         for fi, f in enumerate(session.dataset.features)],
            "model": session.model_spec.to_dict(),
            "budget": session.ledger.total,
            "audit": entry["audit"],
        }

    return app


def _feature_index(session, name):
    try:
        return session.dataset.feature_index(name)
    except KeyError as exc:
        raise HTTPException(422, str(exc)) from exc


def _cleaning_response(entry, accepted, attempts=None, notice=None):
    session = entry["session"]
    out = {
        "accepted": accepted,
        "new_f1": session.current_f1,
        "spent": session.ledger.spent,
        "remaining_budget": session.ledger.remaining,
        "trajectory": session.trajectory.to_lists(),
        "version": entry["version"],
        "terminal": session.terminal,
    }
    if attempts is not None:
        out["attempts"] = [a.to_dict() for a in attempts]
    if notice:
        out["notice"] = notice
    return out


def _parse_cells(session, fi, cells):
    feature = session.dataset.features[fi]
    by_split = {TRAIN: ([], [], []), TEST: ([], [], [])}
    train_rows = set(session.dataset.split_rows(TRAIN).tolist())
    for item in cells:
        row = item.get("row")
        if not isinstance(row, int) or not 0 <= row < session.dataset.n_rows:
            raise HTTPException(422, f"bad row index {row!r}")
        value = item.get("value")
        missing = value is None
        if missing:
            stored = 0.0 if feature.kind == NUMERICAL else 0
        elif feature.kind == NUMERICAL:
            if not isinstance(value, (int, float)) or not np.isfinite(value):
                raise HTTPException(422, f"row {row}: need a finite number")
            stored = float(value)
        else:
            if value not in feature.categories:
                raise HTTPException(
                    422, f"row {row}: {value!r} is not a known category")
            stored = feature.categories.index(value)
        split_name = TRAIN if row in train_rows else TEST
        rows, values, miss = by_split[split_name]
        rows.append(row)
        values.append(stored)
        miss.append(missing)
    dtype = np.float64 if feature.kind == NUMERICAL else np.int64
    return {s: (np.asarray(r, dtype=np.int64), np.asarray(v, dtype=dtype),
                np.asarray(m, dtype=bool))
            for s, (r, v, m) in by_split.items() if r}


def _interactive_cleaning(store, entry, sid, req):
    session = entry["session"]
    if req.feature is None:
        raise HTTPException(422, "interactive cleaning needs a feature")
    fi = _feature_index(session, req.feature)
    candidates = _evaluation(entry)
    match = [c for c in candidates if c.feature == fi and (
        req.error_type is None or c.error_type.name == req.error_type)]
    if not match:
        raise HTTPException(409, f"{req.feature!r} is not a current candidate")
    cand = match[0]
    cost = session.next_cost(cand.feature, cand.error_type)
    if cost > session.ledger.remaining + 1e-9:
        raise HTTPException(409, "budget exhausted for this step")
    cells = _parse_cells(session, fi, req.cleaned_cells or [])
    if not cells:
        raise HTTPException(422, "interactive cleaning needs cleaned_cells")
    attempt = session.execute(cand, attempt_idx=entry["version"],
                              cleaned_cells=cells)
    session.iteration += 1
    key = (cand.feature, cand.error_type.name)
    if attempt.accepted:
        entry["attempted"].clear()
    else:
        entry["attempted"].add(key)
    session.check_terminal()
    entry["version"] += 1
    entry["audit"].append({"event": "cleaning", "feature": req.feature,
                           "accepted": attempt.accepted})
    store.save(sid)
    notice = None
    if not attempt.accepted:
        notice = ("cleaning lowered the score; data reverted and the cleaned "
                  "values were buffered" if not attempt.from_buffer else
                  "buffered values did not help; data reverted")
    return _cleaning_response(entry, accepted=attempt.accepted,
                              attempts=[attempt], notice=notice)


def main(host="127.0.0.1", port=8000, data_dir=None, ui_dir=None):
    import uvicorn
    uvicorn.run(create_app(data_dir, ui_dir), host=host, port=port,
                log_level="warning")
