"""Cost-aware candidate scoring and the iterative cleaning session loop:
probe, rank, clean one step, accept or revert, with a cleaning buffer for
reverted work and a fallback when no candidate looks promising."""

import time
from dataclasses import dataclass, field

import numpy as np

from . import estimator, models
from .metrics import BudgetCurve
from .pollution import (ERROR_BY_NAME, ERROR_TYPES, STEP, clean_cells,
                        compatible_errors)
from .tabular import CLEAN, TEST, TRAIN

RUNNING = "running"
FINISHED = "finished"
BUDGET_EXHAUSTED = "budget_exhausted"
STALLED = "stalled"

_EXEC_TAG = 104729  # keeps execution draws disjoint from probe draws


class BudgetExceededError(RuntimeError):
    pass


# -- cost models ---------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    rate: float = 1.0

    def step_cost(self, steps_done):
        return self.rate


@dataclass(frozen=True)
class OneShot:
    first: float = 2.0
    rest: float = 0.0

    def step_cost(self, steps_done):
        return self.first if steps_done == 0 else self.rest


@dataclass(frozen=True)
class Linear:
    initial: float = 1.0
    increment: float = 1.0

    def step_cost(self, steps_done):
        return self.initial + self.increment * steps_done


def next_step_cost(kind, steps_done):
    if steps_done < 0:
        raise ValueError("steps_done must be non-negative")
    return float(kind.step_cost(steps_done))


#: by-error-type assignment used in the multi-error scenario: missing values
#: impute once up front, gaussian noise gets harder to find each step, the rest
#: stay flat.
MIXED_COSTS = {
    "missing_values": OneShot(2.0, 0.0),
    "gaussian_noise": Linear(1.0, 1.0),
    "categorical_shift": Constant(1.0),
    "scaling": Constant(1.0),
}


class CostModel:
    """Maps each error type to a per-step cost schedule."""

    def __init__(self, assignment=None, default=Constant(1.0)):
        self.assignment = dict(assignment or {})
        self.default = default

    def kind_for(self, error_type):
        name = error_type if isinstance(error_type, str) else error_type.name
        return self.assignment.get(name, self.default)

    def step_cost(self, error_type, steps_done):
        return next_step_cost(self.kind_for(error_type), steps_done)

    def to_dict(self):
        def enc(k):
            if isinstance(k, Constant):
                return {"kind": "constant", "rate": k.rate}
            if isinstance(k, OneShot):
                return {"kind": "one_shot", "first": k.first, "rest": k.rest}
            return {"kind": "linear", "initial": k.initial,
                    "increment": k.increment}
        return {"assignment": {n: enc(k) for n, k in self.assignment.items()},
                "default": enc(self.default)}

    @classmethod
    def from_dict(cls, obj):
        def dec(o):
            if o["kind"] == "constant":
                return Constant(o.get("rate", 1.0))
            if o["kind"] == "one_shot":
                return OneShot(o.get("first", 2.0), o.get("rest", 0.0))
            if o["kind"] == "linear":
                return Linear(o.get("initial", 1.0), o.get("increment", 1.0))
            raise ValueError(f"unknown cost kind {o['kind']!r}")
        return cls({n: dec(k) for n, k in obj.get("assignment", {}).items()},
                   dec(obj.get("default", {"kind": "constant", "rate": 1.0})))


@dataclass
class LedgerEntry:
    iteration: int
    feature: int
    error_type: str
    cost: float
    accepted: bool


class BudgetLedger:
    def __init__(self, total):
        self.total = float(total)
        self.entries = []

    @property
    def spent(self):
        return float(sum(e.cost for e in self.entries))

    @property
    def remaining(self):
        return self.total - self.spent

    def charge(self, iteration, feature, error_type, cost, accepted):
        if self.spent + cost > self.total + 1e-9:
            raise BudgetExceededError(
                f"cost {cost} exceeds remaining budget {self.remaining}")
        self.entries.append(LedgerEntry(iteration, feature, error_type,
                                        float(cost), accepted))

    def to_rows(self):
        return [[e.iteration, e.feature, e.error_type, e.cost, e.accepted]
                for e in self.entries]

    def to_csv(self):
        lines = ["iteration,feature,error_type,cost,accepted"]
        for e in self.entries:
            lines.append(f"{e.iteration},{e.feature},{e.error_type},"
                         f"{e.cost},{int(e.accepted)}")
        return "\n".join(lines) + "\n"


# -- scoring -------------------------------------------------------------------

@dataclass
class ScoredCandidate:
    feature: int
    error_type: object
    prediction: estimator.Prediction
    cost: float
    score: float
    samples: estimator.AccuracySamples = None

    def sort_key(self):
        margin = self.prediction.predicted_f1 - self.prediction.uncertainty
        err_order = ERROR_TYPES.index(self.error_type)
        if np.isinf(self.score):
            return (0, -margin, self.feature, err_order)
        return (1, -self.score, self.feature, err_order)


def score(prediction, cost):
    """(predicted F1 − uncertainty) per cost unit; free steps rank above all."""
    if cost < 0:
        raise ValueError("cost must be non-negative")
    margin = prediction.predicted_f1 - prediction.uncertainty
    return float("inf") if cost == 0 else margin / cost


def rank(candidates, current_f1):
    """Keep candidates predicted to beat the current F1, best score first."""
    kept = [c for c in candidates if c.prediction.predicted_f1 > current_f1]
    return sorted(kept, key=ScoredCandidate.sort_key)


# -- cleaning buffer -----------------------------------------------------------

class CleaningBuffer:
    """Cleaned cell values whose application was reverted; reusable for free."""

    def __init__(self):
        self.entries = {}

    @staticmethod
    def _key(feature, error_type):
        name = error_type if isinstance(error_type, str) else error_type.name
        return (int(feature), name)

    def has(self, feature, error_type):
        return self._key(feature, error_type) in self.entries

    def store(self, feature, error_type, payload):
        """Keep one entry per key; a second store merges the cleaned cells."""
        key = self._key(feature, error_type)
        existing = self.entries.get(key)
        if existing is None:
            self.entries[key] = payload
            return
        merged = {}
        for split in set(existing) | set(payload):
            parts = [p[split] for p in (existing, payload) if split in p]
            if len(parts) == 1:
                merged[split] = parts[0]
                continue
            rows = np.concatenate([parts[0][0], parts[1][0]])
            values = np.concatenate([parts[0][1], parts[1][1]])
            missing = np.concatenate([parts[0][2], parts[1][2]])
            keep_rows, keep_idx = [], []
            seen = set()
            for i in range(len(rows) - 1, -1, -1):  # later writes win
                if int(rows[i]) not in seen:
                    seen.add(int(rows[i]))
                    keep_idx.append(i)
            keep_idx = np.asarray(sorted(keep_idx), dtype=np.int64)
            merged[split] = (rows[keep_idx], values[keep_idx],
                             missing[keep_idx])
        self.entries[key] = merged

    def pop(self, feature, error_type):
        return self.entries.pop(self._key(feature, error_type))

    def to_dict(self):
        out = {}
        for (fi, name), payload in self.entries.items():
            out[f"{fi}:{name}"] = {
                split: {"rows": rows.tolist(), "values": values.tolist(),
                        "missing": missing.tolist()}
                for split, (rows, values, missing) in payload.items()}
        return out

    @classmethod
    def from_dict(cls, obj):
        buf = cls()
        for key, splits in obj.items():
            fi, name = key.split(":", 1)
            payload = {}
            for split, cells in splits.items():
                payload[split] = (np.asarray(cells["rows"], dtype=np.int64),
                                  np.asarray(cells["values"]),
                                  np.asarray(cells["missing"], dtype=bool))
            buf.entries[(int(fi), name)] = payload
        return buf


# -- session -------------------------------------------------------------------

@dataclass
class Attempt:
    feature: int
    error_type: str
    predicted_f1: float
    uncertainty: float
    score: float
    cost: float
    from_buffer: bool
    fallback: bool
    cells_cleaned: int
    actual_f1: float
    accepted: bool

    def to_dict(self):
        out = dict(self.__dict__)
        if out["score"] is not None and not np.isfinite(out["score"]):
            out["score"] = None  # zero-cost steps carry an infinite score
        return out


@dataclass
class IterationRecord:
    index: int
    attempts: list = field(default_factory=list)
    accepted: bool = False
    duration_s: float = 0.0

    def to_dict(self):
        return {"index": self.index, "accepted": self.accepted,
                "duration_s": self.duration_s,
                "attempts": [a.to_dict() for a in self.attempts]}


class Session:
    """One cleaning campaign over a dataset with a fixed model and budget.

    Simulated sessions clean from the truth store; interactive sessions apply
    values supplied by the caller. All randomness derives from the session
    seed and the iteration counter, so replays are exact.
    """

    def __init__(self, dataset, model_spec, cost_model, budget, seed=0,
                 scenario_error=None, combos=estimator.DEFAULT_COMBOS,
                 interactive=False):
        self.dataset = dataset
        self.model_spec = model_spec
        self.cost_model = cost_model
        self.ledger = BudgetLedger(budget)
        self.log = estimator.DiscrepancyLog()
        self.buffer = CleaningBuffer()
        self.seed = int(seed)
        self.scenario_error = scenario_error
        self.combos = combos
        self.interactive = interactive

        self.steps_done = {}
        self.best_clean = {}   # feature -> (f1, error name)
        self.fully_clean = set()
        self.exhausted = set()
        self.iteration = 0
        self.records = []
        self.terminal = None
        self.stall_count = 0
        self.accepted_steps = 0
        # buffered work that failed at a given state: futile to retry until
        # another step lands, since measurements are deterministic
        self.buffer_failed_at = {}

        self.current_f1 = estimator.measure_current_f1(dataset, model_spec)
        self.trajectory = BudgetCurve([(0.0, self.current_f1)])
        for fi in range(dataset.n_features):
            if not self.interactive and dataset.dirty_rows(fi).size == 0:
                self.fully_clean.add(fi)

    # -- candidate enumeration -------------------------------------------------

    def errors_for(self, fi):
        feature = self.dataset.features[fi]
        if self.scenario_error is not None:
            err = self.scenario_error
            ok = err.compatible(feature.kind) and not (
                err.name == "categorical_shift" and len(feature.categories) < 2)
            errs = [err] if ok else []
        else:
            errs = compatible_errors(feature)
        return [e for e in errs if (fi, e.name) not in self.exhausted]

    def _buffer_locked(self, fi, err):
        """True when re-applying the buffer now would fail exactly as before."""
        key = (fi, err if isinstance(err, str) else err.name)
        return self.buffer.has(*key) and \
            self.buffer_failed_at.get(key) == self.accepted_steps

    def candidate_pairs(self):
        pairs = []
        for fi in range(self.dataset.n_features):
            if fi in self.fully_clean:
                continue
            for err in self.errors_for(fi):
                pairs.append((fi, err))
        return pairs

    def next_cost(self, fi, err):
        if self.buffer.has(fi, err) and not self._buffer_locked(fi, err):
            return 0.0
        return self.cost_model.step_cost(err, self.steps_done.get(
            (fi, err.name), 0))

    def cheapest_available(self):
        costs = [self.next_cost(fi, err) for fi, err in self.candidate_pairs()]
        return min(costs) if costs else None

    def check_terminal(self):
        if self.terminal:
            return self.terminal
        cheapest = self.cheapest_available()
        if cheapest is None:
            self.terminal = FINISHED
        elif cheapest > self.ledger.remaining + 1e-9:
            self.terminal = BUDGET_EXHAUSTED
        elif self.stall_count > max(8, 2 * self.dataset.n_features):
            # free rejected steps make no progress; stop looping on them
            self.terminal = STALLED
        return self.terminal

    # -- evaluation (the probe pass) --------------------------------------------

    def evaluate(self):
        """Probe every candidate pair and score it; no dataset mutation."""
        candidates = []
        for fi, err in self.candidate_pairs():
            samples = estimator.measure_pollution_effect(
                self.dataset, fi, err, self.model_spec, combos=self.combos,
                seed=[self.seed, self.iteration, fi, ERROR_TYPES.index(err)],
                base_f1=self.current_f1)
            pred = estimator.adjust(estimator.fit_predict(samples), self.log)
            cost = self.next_cost(fi, err)
            candidates.append(ScoredCandidate(
                fi, err, pred, cost, score(pred, cost), samples))
        return candidates

    def fallback_pick(self, candidates, attempted):
        """Best historical post-cleaning F1 first; otherwise best raw score."""
        pool = [c for c in candidates
                if (c.feature, c.error_type.name) not in attempted
                and self.next_cost(c.feature, c.error_type)
                <= self.ledger.remaining + 1e-9]
        if not pool:
            return None
        with_history = [c for c in pool if c.feature in self.best_clean]
        if with_history:
            def history_key(c):
                f1, err_name = self.best_clean[c.feature]
                return (-f1, c.feature,
                        0 if c.error_type.name == err_name else 1,
                        ERROR_TYPES.index(c.error_type))
            return min(with_history, key=history_key)
        return min(pool, key=ScoredCandidate.sort_key)

    # -- execution ---------------------------------------------------------------

    def _step_quota(self, split):
        return int(np.ceil(STEP * len(self.dataset.split_rows(split))))

    def _pick_cleaning_rows(self, cand, rng):
        """Priority cells first, then random cells dirty with the same error."""
        fi, err = cand.feature, cand.error_type
        rows_by_split = {}
        for split in (TRAIN, TEST):
            quota = self._step_quota(split)
            marked = self.dataset.error_marks[fi] & err.bit != 0
            chosen = []
            if cand.samples is not None:
                for r in cand.samples.priority_cells(split):
                    if marked[r] and len(chosen) < quota:
                        chosen.append(int(r))
            if len(chosen) < quota:
                pool = [int(r) for r in self.dataset.split_rows(split)
                        if marked[r] and int(r) not in chosen]
                take = min(quota - len(chosen), len(pool))
                if take > 0:
                    pick = rng.choice(len(pool), size=take, replace=False)
                    chosen.extend(pool[i] for i in np.sort(pick))
            rows_by_split[split] = np.asarray(chosen, dtype=np.int64)
        return rows_by_split

    def _buffer_payload(self, fi, rows_by_split):
        feature = self.dataset.features[fi]
        payload = {}
        for split, rows in rows_by_split.items():
            payload[split] = (rows.copy(), feature.values[rows].copy(),
                              feature.missing[rows].copy())
        return payload

    def _apply_buffer(self, fi, payload):
        feature = self.dataset.features[fi]
        n = 0
        for rows, values, missing in payload.values():
            feature.values[rows] = values
            feature.missing[rows] = missing
            self.dataset.provenance[fi, rows] = CLEAN
            self.dataset.error_marks[fi, rows] = 0
            n += len(rows)
        return n

    def execute(self, cand, attempt_idx, fallback=False, cleaned_cells=None):
        """Run one cleaning step for the candidate and accept or revert it.

        ``cleaned_cells`` carries interactive-mode values as
        {split: (rows, values, missing)}; simulated mode cleans from truth.
        """
        fi, err = cand.feature, cand.error_type
        from_buffer = self.buffer.has(fi, err) \
            and not self._buffer_locked(fi, err)
        cost = 0.0 if from_buffer else self.next_cost(fi, err)
        snap = self.dataset.snapshot()
        payload = None
        if from_buffer:
            payload = self.buffer.pop(fi, err)
            cells = self._apply_buffer(fi, payload)
        elif cleaned_cells is not None:
            payload = {s: (np.asarray(r, dtype=np.int64), np.asarray(v),
                           np.asarray(m, dtype=bool))
                       for s, (r, v, m) in cleaned_cells.items()}
            cells = self._apply_buffer(fi, payload)
            payload = self._buffer_payload(
                fi, {s: p[0] for s, p in payload.items()})
        else:
            rng = np.random.default_rng(
                [self.seed, self.iteration, attempt_idx, _EXEC_TAG])
            rows_by_split = self._pick_cleaning_rows(cand, rng)
            cells = int(sum(len(r) for r in rows_by_split.values()))
            for split, rows in rows_by_split.items():
                if len(rows):
                    clean_cells(self.dataset, fi, rows)
            payload = self._buffer_payload(fi, rows_by_split)

        new_f1 = estimator.measure_current_f1(self.dataset, self.model_spec)
        estimator.record_outcome(self.log, fi, err,
                                 cand.prediction.predicted_f1, new_f1)
        accepted = new_f1 > self.current_f1
        self.ledger.charge(self.iteration, fi, err.name, cost, accepted)
        if not from_buffer:
            key = (fi, err.name)
            self.steps_done[key] = self.steps_done.get(key, 0) + 1
            if cells == 0 and not self.interactive:
                self.exhausted.add(key)

        if accepted:
            self.accepted_steps += 1
            self.current_f1 = new_f1
            self.trajectory.append(self.ledger.spent, new_f1)
            best = self.best_clean.get(fi)
            if best is None or new_f1 > best[0]:
                self.best_clean[fi] = (new_f1, err.name)
            self.buffer_failed_at.pop((fi, err.name), None)
            if not self.interactive and self.dataset.dirty_rows(fi).size == 0:
                self.fully_clean.add(fi)
        else:
            self.dataset.restore(snap)
            if payload is not None and cells > 0:
                self.buffer.store(fi, err, payload)
                if from_buffer:
                    # keep the paid-for work, but retrying it before the
                    # state changes would fail identically
                    self.buffer_failed_at[(fi, err.name)] = self.accepted_steps
                else:
                    # a merged entry is new material, worth one free attempt
                    self.buffer_failed_at.pop((fi, err.name), None)

        return Attempt(fi, err.name, cand.prediction.predicted_f1,
                       cand.prediction.uncertainty, cand.score, cost,
                       from_buffer, fallback, cells, new_f1, accepted)

    # -- the loop -----------------------------------------------------------------

    def run_iteration(self):
        """One full pass: probe, rank, walk the ranking, fall back if needed."""
        started = time.perf_counter()
        record = IterationRecord(self.iteration)
        candidates = self.evaluate()
        ranked = rank(candidates, self.current_f1)
        attempted = set()
        attempt_idx = 0
        for cand in ranked:
            if self.next_cost(cand.feature, cand.error_type) \
                    > self.ledger.remaining + 1e-9:
                continue
            attempt = self.execute(cand, attempt_idx, fallback=False)
            attempted.add((cand.feature, cand.error_type.name))
            record.attempts.append(attempt)
            attempt_idx += 1
            if attempt.accepted:
                record.accepted = True
                break
        if not record.accepted:
            fb = self.fallback_pick(candidates, attempted)
            if fb is not None:
                attempt = self.execute(fb, attempt_idx, fallback=True)
                record.attempts.append(attempt)
                record.accepted = attempt.accepted
        self.iteration += 1
        if record.accepted or sum(a.cost for a in record.attempts) > 0:
            self.stall_count = 0
        else:
            self.stall_count += 1
        record.duration_s = time.perf_counter() - started
        self.records.append(record)
        return record


@dataclass
class SessionResult:
    trajectory: BudgetCurve
    ledger: BudgetLedger
    log: estimator.DiscrepancyLog
    records: list
    terminal: str

    @property
    def final_f1(self):
        return self.trajectory.points[-1][1]


def run_session(session):
    """Iterate until the budget runs dry or nothing is left to clean."""
    while session.check_terminal() is None:
        session.run_iteration()
    return SessionResult(session.trajectory, session.ledger, session.log,
                         session.records, session.terminal)
