"""Random hyperparameter search over fixed per-algorithm spaces."""

from dataclasses import dataclass

import numpy as np

from ..metrics import score_labels
from .learners import (GRADIENT_BOOSTING, KNN, LINEAR_REGRESSION, LINEAR_SVM,
                       LOGISTIC_REGRESSION, MLP, DegenerateLabelsError,
                       ModelSpec, fit)
from .pipeline import TableView


def _draw(algorithm, rng):
    if algorithm == KNN:
        return {"k": int(rng.integers(1, 26))}
    if algorithm == LOGISTIC_REGRESSION:
        return {"l2": float(10.0 ** rng.uniform(-4, 2))}
    if algorithm == LINEAR_SVM:
        return {"c": float(10.0 ** rng.uniform(-3, 2))}
    if algorithm == GRADIENT_BOOSTING:
        return {"depth": int(rng.integers(1, 4)),
                "rounds": int(rng.integers(20, 201)),
                "learning_rate": float(10.0 ** rng.uniform(-2, 0))}
    if algorithm == MLP:
        return {"hidden": int(rng.integers(8, 65))}
    if algorithm == LINEAR_REGRESSION:
        return {"ridge": float(10.0 ** rng.uniform(-6, 0))}
    raise ValueError(f"unknown algorithm {algorithm!r}")


def holdout_rows(labels, rows, fraction, rng):
    """Stratified holdout split of ``rows``; singleton classes stay in train."""
    fit_rows, val_rows = [], []
    for c in np.unique(labels[rows]):
        cls_rows = rows[labels[rows] == c]
        cls_rows = cls_rows[rng.permutation(len(cls_rows))]
        if len(cls_rows) < 2:
            fit_rows.append(cls_rows)
            continue
        n_val = min(max(int(np.floor(fraction * len(cls_rows) + 0.5)), 1),
                    len(cls_rows) - 1)
        val_rows.append(cls_rows[:n_val])
        fit_rows.append(cls_rows[n_val:])
    return np.sort(np.concatenate(fit_rows)), np.sort(np.concatenate(val_rows))


@dataclass
class Trial:
    spec: ModelSpec
    f1: float
    failed: bool = False


@dataclass
class SearchResult:
    best: ModelSpec
    trials: list


def random_search(algorithm, view, n_samples=10, seed=0):
    """Draw specs uniformly, evaluate on a stratified 80/20 holdout, argmax.

    Ties keep the earlier draw; candidates whose fit fails are disqualified.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    dataset = view.dataset
    fit_rows, val_rows = holdout_rows(dataset.labels, view.rows, 0.2, rng)
    fit_view = TableView(dataset, fit_rows, view.overrides)
    val_view = TableView(dataset, val_rows, view.overrides)

    trials = []
    best = None
    best_f1 = -1.0
    for _ in range(n_samples):
        spec = ModelSpec(algorithm, _draw(algorithm, rng), seed=seed)
        try:
            model = fit(spec, fit_view)
        except DegenerateLabelsError:
            trials.append(Trial(spec, 0.0, failed=True))
            continue
        score = score_labels(dataset, val_view.labels, model.predict(val_view))
        trials.append(Trial(spec, score))
        if score > best_f1:
            best, best_f1 = spec, score
    if best is None:
        raise DegenerateLabelsError("every candidate failed to fit")
    return SearchResult(best, trials)
