"""Contender strategies sharing the guided session's step size and cost
accounting: importance-ranked cleaning, random cleaning, a rank-once variant,
gradient-ranked record cleaning, and the exhaustive greedy oracle."""

from dataclasses import dataclass, field

import numpy as np

from . import estimator, models
from .metrics import BudgetCurve, propagate
from .pollution import ERROR_TYPES, STEP, clean_cells
from .recommender import BUDGET_EXHAUSTED, FINISHED, BudgetLedger, Session
from .tabular import TEST, TRAIN


@dataclass
class ImportanceRanking:
    entries: list  # (feature index, importance), descending
    method: str = "shapley-sampled"

    def order(self):
        return [fi for fi, _ in self.entries]


class _ArrayView:
    """Minimal column container for transforming synthetic coalition rows."""

    def __init__(self, columns, n):
        self.columns = columns
        self.n = n

    @property
    def n_rows(self):
        return self.n

    def column(self, fi):
        return self.columns[fi]


def _model_score(model, view):
    scores = model.decision_scores(view)
    if model.n_classes == 2:
        return scores[:, 1]
    return scores


def shapley_importance(model_spec, dataset, n_permutations=32, seed=0,
                       background=100):
    """Permutation-sampled Shapley importance of each feature's contribution.

    Coalitions splice explained rows into background rows feature by feature;
    importance is the mean absolute attribution over the explained sample.
    """
    if n_permutations < 1:
        raise ValueError("need at least one permutation")
    rng = np.random.default_rng(seed)
    train_rows = dataset.split_rows(TRAIN)
    view = models.TableView(dataset, train_rows)
    model = models.fit(model_spec, view)

    take = min(background, len(train_rows))
    sample = train_rows[np.sort(rng.choice(len(train_rows), take, replace=False))]
    nf = dataset.n_features
    cols = [models.TableView(dataset, sample).column(fi) for fi in range(nf)]

    base_scores = _model_score(model, models.TableView(dataset, sample))
    if model.n_classes > 2:
        base_class = np.argmax(base_scores, axis=1)

    phi = np.zeros((take, nf))
    for _ in range(n_permutations):
        perm = rng.permutation(nf)
        partner = rng.integers(0, take, size=take)
        # coalition k: first k features (in perm order) come from the explained
        # row, the rest from its background partner; k runs 0..nf inclusive
        stacked = []
        for fi in range(nf):
            values, missing = cols[fi]
            pv, pm = values[partner], missing[partner]
            rank_of = int(np.flatnonzero(perm == fi)[0])
            col_v = np.empty((nf + 1) * take)
            col_m = np.empty((nf + 1) * take, dtype=bool)
            for k in range(nf + 1):
                use_x = rank_of < k
                col_v[k * take:(k + 1) * take] = values if use_x else pv
                col_m[k * take:(k + 1) * take] = missing if use_x else pm
            stacked.append((col_v, col_m))
        scores = _model_score(model, _ArrayView(stacked, (nf + 1) * take))
        if model.n_classes > 2:
            idx = np.tile(np.arange(take), nf + 1)
            scores = scores[np.arange(len(idx)), base_class[idx]]
        per_k = scores.reshape(nf + 1, take)
        for k in range(nf):
            phi[:, perm[k]] += per_k[k + 1] - per_k[k]
    phi /= n_permutations

    importance = np.mean(np.abs(phi), axis=0)
    order = sorted(range(nf), key=lambda fi: (-importance[fi], fi))
    return ImportanceRanking([(fi, float(importance[fi])) for fi in order])


# -- shared stepping machinery ---------------------------------------------------

def feature_step_rows(dataset, fi, rng):
    """One cleaning step's worth of dirty cells in the feature, per split."""
    rows_by_split = {}
    for split in (TRAIN, TEST):
        rows = dataset.split_rows(split)
        quota = int(np.ceil(STEP * len(rows)))
        dirty = dataset.dirty_rows(fi, split)
        take = min(quota, len(dirty))
        if take == 0:
            rows_by_split[split] = np.empty(0, dtype=np.int64)
            continue
        pick = rng.choice(len(dirty), size=take, replace=False)
        rows_by_split[split] = dirty[np.sort(pick)]
    return rows_by_split


def _errors_in_batch(dataset, fi_rows):
    """Error types present among the about-to-be-cleaned cells."""
    bits = 0
    for fi, rows in fi_rows:
        if len(rows):
            bits |= int(np.bitwise_or.reduce(dataset.error_marks[fi, rows]))
    return [e for e in ERROR_TYPES if bits & e.bit]


@dataclass
class BaselineResult:
    curve: BudgetCurve
    ledger: BudgetLedger
    terminal: str
    extra: dict = field(default_factory=dict)

    @property
    def final_f1(self):
        return self.curve.points[-1][1]


class _Runner:
    def __init__(self, dataset, model_spec, cost_model, budget, seed):
        self.dataset = dataset
        self.model_spec = model_spec
        self.cost_model = cost_model
        self.ledger = BudgetLedger(budget)
        self.seed = int(seed)
        self.steps_done = {}
        self.fully_clean = set()
        self.iteration = 0
        self.current_f1 = estimator.measure_current_f1(dataset, model_spec)
        self.trajectory = BudgetCurve([(0.0, self.current_f1)])
        for fi in range(dataset.n_features):
            if dataset.dirty_rows(fi).size == 0:
                self.fully_clean.add(fi)

    def dirty_features(self):
        return [fi for fi in range(self.dataset.n_features)
                if fi not in self.fully_clean]

    def feature_step_cost(self, fi, rows_by_split):
        errs = _errors_in_batch(self.dataset,
                                [(fi, rows) for rows in rows_by_split.values()])
        parts = [(e, self.cost_model.step_cost(
            e, self.steps_done.get((fi, e.name), 0))) for e in errs]
        return sum(c for _, c in parts), parts

    def commit_feature_step(self, fi, rows_by_split, parts):
        for split, rows in rows_by_split.items():
            if len(rows):
                clean_cells(self.dataset, fi, rows)
        for err, cost in parts:
            self.ledger.charge(self.iteration, fi, err.name, cost, True)
            key = (fi, err.name)
            self.steps_done[key] = self.steps_done.get(key, 0) + 1
        self.current_f1 = estimator.measure_current_f1(
            self.dataset, self.model_spec)
        self.trajectory.append(self.ledger.spent, self.current_f1)
        if self.dataset.dirty_rows(fi).size == 0:
            self.fully_clean.add(fi)
        self.iteration += 1


def _cursor_session(runner, pick_target):
    """No-revert cleaning loop: clean one step of the picked feature each turn."""
    while True:
        dirty = runner.dirty_features()
        if not dirty:
            return BaselineResult(runner.trajectory, runner.ledger, FINISHED)
        fi = pick_target(dirty)
        rng = np.random.default_rng([runner.seed, runner.iteration, fi])
        rows_by_split = feature_step_rows(runner.dataset, fi, rng)
        if sum(len(r) for r in rows_by_split.values()) == 0:
            runner.fully_clean.add(fi)
            continue
        cost, parts = runner.feature_step_cost(fi, rows_by_split)
        if cost > runner.ledger.remaining + 1e-9:
            return BaselineResult(runner.trajectory, runner.ledger,
                                  BUDGET_EXHAUSTED)
        runner.commit_feature_step(fi, rows_by_split, parts)


def fir_session(dataset, model_spec, cost_model, budget, seed,
                n_permutations=32):
    """Importance-ranked cleaning: rank once on the dirty data, then clean the
    top-ranked dirty feature step by step until it is fully clean."""
    ranking = shapley_importance(model_spec, dataset,
                                 n_permutations=n_permutations, seed=seed)
    runner = _Runner(dataset, model_spec, cost_model, budget, seed)
    order = ranking.order()

    def pick(dirty):
        for fi in order:
            if fi in dirty:
                return fi
        return dirty[0]

    result = _cursor_session(runner, pick)
    result.extra["ranking"] = ranking.entries
    return result


def rr_session(dataset, model_spec, cost_model, budget, seed, repeats=5):
    """Random feature each step, averaged over repeats on the budget axis."""
    snap = dataset.snapshot()
    curves = []
    ledgers = []
    for rep in range(repeats):
        dataset.restore(snap)
        runner = _Runner(dataset, model_spec, cost_model, budget,
                         seed=int(seed) * 100003 + rep)
        pick_rng = np.random.default_rng([int(seed), rep, 2718])

        def pick(dirty):
            return dirty[int(pick_rng.integers(0, len(dirty)))]

        res = _cursor_session(runner, pick)
        curves.append(res.curve)
        ledgers.append(res.ledger)
    dataset.restore(snap)
    max_budget = int(np.floor(budget))
    dense = np.mean([propagate(c, max_budget) for c in curves], axis=0)
    avg = BudgetCurve([(float(u), float(v)) for u, v in enumerate(dense)])
    return BaselineResult(avg, ledgers[0], FINISHED,
                          extra={"repeats": [c.to_lists() for c in curves]})


class StaticRankSession(Session):
    """Rank-once variant: one probe pass up front, the guided mechanics after.

    The initial candidate list (scores included) is frozen; accept/revert,
    buffering, and fallback behave exactly as in the adaptive session.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._static = None

    def evaluate(self):
        if self._static is None:
            self._static = super().evaluate()
        return [c for c in self._static
                if c.feature not in self.fully_clean
                and (c.feature, c.error_type.name) not in self.exhausted]


def cl_session(dataset, model_spec, cost_model, budget, seed,
               scenario_error=None, combos=estimator.DEFAULT_COMBOS):
    session = StaticRankSession(dataset, model_spec, cost_model, budget,
                                seed=seed, scenario_error=scenario_error,
                                combos=combos)
    while session.check_terminal() is None:
        session.run_iteration()
    return BaselineResult(session.trajectory, session.ledger, session.terminal,
                          extra={"records": [r.to_dict()
                                             for r in session.records]})


def ac_session(dataset, model_spec, cost_model, budget, seed):
    """Gradient-ranked record cleaning adapted to feature-level cost accounting.

    Pre-trains on fully-clean records, then repeatedly cleans the records with
    the largest per-record loss gradient (one step's worth), refitting after
    each batch. Costs sum the next-step cost of every error type the batch
    touched; record-wise step counts are kept per error type.
    """
    if model_spec.algorithm not in models.GRADIENT_CAPABLE:
        raise models.CapabilityError(
            f"{model_spec.algorithm} exposes no per-record gradients")
    dataset_rows = dataset.split_rows(TRAIN)
    clean_rows = np.intersect1d(dataset.fully_clean_rows(), dataset_rows)
    pretrain_rows = dataset_rows
    if len(clean_rows) >= 2 and \
            len(np.unique(dataset.labels[clean_rows])) >= 2:
        pretrain_rows = clean_rows
    model = models.fit(model_spec, models.TableView(dataset, pretrain_rows))

    ledger = BudgetLedger(budget)
    steps_done = {}
    current_f1 = estimator.measure_current_f1(dataset, model_spec)
    curve = BudgetCurve([(0.0, current_f1)])
    iteration = 0
    batch_size = int(np.ceil(STEP * len(dataset_rows)))
    while True:
        dirty_cells = (dataset.provenance[:, dataset_rows] != 0).sum(axis=0)
        dirty_records = dataset_rows[dirty_cells > 0]
        if len(dirty_records) == 0:
            return BaselineResult(curve, ledger, FINISHED)
        x = model.pipeline.transform(models.TableView(dataset, dirty_records))
        norms = np.array([
            np.linalg.norm(model.record_gradient(x[i], dataset.labels[r]))
            for i, r in enumerate(dirty_records)])
        order = np.lexsort((dirty_records, -norms))
        batch = dirty_records[order[:min(batch_size, len(dirty_records))]]

        errs = _errors_in_batch(dataset,
                                [(fi, batch) for fi in range(dataset.n_features)])
        cost_parts = [(e, cost_model.step_cost(e, steps_done.get(e.name, 0)))
                      for e in errs]
        cost = sum(c for _, c in cost_parts)
        if cost > ledger.remaining + 1e-9:
            return BaselineResult(curve, ledger, BUDGET_EXHAUSTED)
        for fi in range(dataset.n_features):
            clean_cells(dataset, fi, batch)
        for e, c in cost_parts:
            ledger.charge(iteration, -1, e.name, c, True)
            steps_done[e.name] = steps_done.get(e.name, 0) + 1
        model = models.fit(model_spec, models.TableView(dataset, dataset_rows))
        current_f1 = estimator.measure_current_f1(dataset, model_spec)
        curve.append(ledger.spent, current_f1)
        iteration += 1


def oracle_session(dataset, model_spec, cost_model, budget, seed):
    """Greedy exhaustive selector: tentatively clean every candidate one step,
    keep the one with the best measured gain per cost."""
    if not dataset.simulation_mode:
        raise ValueError("the oracle needs the truth store")
    runner = _Runner(dataset, model_spec, cost_model, budget, seed)
    evaluations = []
    while True:
        candidates = []
        for fi in runner.dirty_features():
            bits = int(np.bitwise_or.reduce(
                dataset.error_marks[fi, dataset.dirty_rows(fi)]))
            for ei, err in enumerate(ERROR_TYPES):
                if bits & err.bit:
                    candidates.append((fi, ei, err))
        if not candidates:
            return BaselineResult(runner.trajectory, runner.ledger, FINISHED,
                                  extra={"evaluations": evaluations})

        snap = dataset.snapshot()
        evals = []
        for fi, ei, err in candidates:
            rng = np.random.default_rng([runner.seed, runner.iteration, fi, ei])
            rows_by_split = _error_step_rows(dataset, fi, err, rng)
            for split, rows in rows_by_split.items():
                if len(rows):
                    clean_cells(dataset, fi, rows)
            f1 = estimator.measure_current_f1(dataset, model_spec)
            dataset.restore(snap)
            cost = cost_model.step_cost(err, runner.steps_done.get(
                (fi, err.name), 0))
            gain = f1 - runner.current_f1
            if cost > 0:
                ratio = gain / cost
            else:
                ratio = np.inf if gain > 0 else (0.0 if gain == 0 else -np.inf)
            evals.append({"feature": fi, "error_type": err.name, "gain": gain,
                          "cost": cost, "ratio": ratio})

        affordable = [(i, e) for i, e in enumerate(evals)
                      if e["cost"] <= runner.ledger.remaining + 1e-9]
        if not affordable:
            return BaselineResult(runner.trajectory, runner.ledger,
                                  BUDGET_EXHAUSTED,
                                  extra={"evaluations": evaluations})
        best_i, best = min(
            affordable,
            key=lambda ie: (-ie[1]["ratio"], ie[1]["feature"],
                            candidates[ie[0]][1]))
        fi, ei, err = candidates[best_i]
        rng = np.random.default_rng([runner.seed, runner.iteration, fi, ei])
        rows_by_split = _error_step_rows(dataset, fi, err, rng)
        for split, rows in rows_by_split.items():
            if len(rows):
                clean_cells(dataset, fi, rows)
        runner.ledger.charge(runner.iteration, fi, err.name, best["cost"], True)
        key = (fi, err.name)
        runner.steps_done[key] = runner.steps_done.get(key, 0) + 1
        runner.current_f1 = estimator.measure_current_f1(dataset, model_spec)
        runner.trajectory.append(runner.ledger.spent, runner.current_f1)
        if dataset.dirty_rows(fi).size == 0:
            runner.fully_clean.add(fi)
        evaluations.append({"iteration": runner.iteration, "evaluated": evals,
                            "committed": {"feature": fi,
                                          "error_type": err.name}})
        runner.iteration += 1


def _error_step_rows(dataset, fi, err, rng):
    """One step's worth of cells dirty with the given error type, per split."""
    rows_by_split = {}
    for split in (TRAIN, TEST):
        rows = dataset.split_rows(split)
        quota = int(np.ceil(STEP * len(rows)))
        marked = rows[(dataset.error_marks[fi, rows] & err.bit) != 0]
        take = min(quota, len(marked))
        if take == 0:
            rows_by_split[split] = np.empty(0, dtype=np.int64)
            continue
        pick = rng.choice(len(marked), size=take, replace=False)
        rows_by_split[split] = marked[np.sort(pick)]
    return rows_by_split
