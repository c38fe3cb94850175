"""F1 scoring, prediction MAE, and step-function budget curves."""

from dataclasses import dataclass, field

import numpy as np

BINARY_POSITIVE = "binary-positive"
MACRO = "macro"


def _f1_for_class(y_true, y_pred, c):
    tp = int(np.sum((y_pred == c) & (y_true == c)))
    fp = int(np.sum((y_pred == c) & (y_true != c)))
    fn = int(np.sum((y_pred != c) & (y_true == c)))
    if 2 * tp + fp + fn == 0:
        return 0.0
    return 2.0 * tp / (2 * tp + fp + fn)


def f1(y_true, y_pred, averaging=BINARY_POSITIVE, n_classes=None,
       positive=1):
    """Harmonic precision/recall mean; zero-division resolves to 0."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) == 0 or len(y_true) != len(y_pred):
        raise ValueError("need equal-length, non-empty label vectors")
    if averaging == BINARY_POSITIVE:
        return _f1_for_class(y_true, y_pred, positive)
    if averaging == MACRO:
        if n_classes is None:
            n_classes = int(max(y_true.max(), y_pred.max())) + 1
        return float(np.mean([_f1_for_class(y_true, y_pred, c)
                              for c in range(n_classes)]))
    raise ValueError(f"unknown averaging {averaging!r}")


def averaging_for(n_classes):
    """Binary tasks score the positive class; three or more go macro."""
    return BINARY_POSITIVE if n_classes == 2 else MACRO


def score_labels(dataset, y_true, y_pred):
    k = len(dataset.classes)
    return f1(y_true, y_pred, averaging_for(k), n_classes=k)


def mae(predicted, actual):
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if len(predicted) == 0 or len(predicted) != len(actual):
        raise ValueError("need equal-length, non-empty value vectors")
    return float(np.mean(np.abs(predicted - actual)))


@dataclass
class BudgetCurve:
    """Ordered (budget spent, f1) points with step-function semantics."""

    points: list = field(default_factory=list)

    def append(self, budget, value):
        if self.points and budget < self.points[-1][0]:
            raise ValueError("budgets must be non-decreasing")
        self.points.append((float(budget), float(value)))

    def to_lists(self):
        return [list(p) for p in self.points]

    @classmethod
    def from_lists(cls, rows):
        return cls([(float(b), float(v)) for b, v in rows])


def propagate(curve, max_budget):
    """Densify to one value per integer budget unit, holding the last point."""
    points = curve.points if isinstance(curve, BudgetCurve) else list(curve)
    if not points or points[0][0] != 0:
        raise ValueError("curve must start at budget 0")
    out = np.empty(max_budget + 1)
    i = 0
    current = points[0][1]
    for u in range(max_budget + 1):
        while i < len(points) and points[i][0] <= u:
            current = points[i][1]
            i += 1
        out[u] = current
    return out


def advantage(curve_a, curve_b, max_budget):
    """Per-unit F1 difference a − b after propagating both to the budget axis."""
    return propagate(curve_a, max_budget) - propagate(curve_b, max_budget)
