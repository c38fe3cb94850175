"""Row views over a dataset and the train-fitted preprocessing pipeline."""

import numpy as np

from ..tabular import CATEGORICAL, NUMERICAL


class TableView:
    """Read-only window over a dataset: a row subset plus column overrides.

    Overrides map feature index to full-length (values, missing) arrays, which
    is how probe overlays are fed to a model without mutating the base data.
    """

    def __init__(self, dataset, rows, overrides=None):
        self.dataset = dataset
        self.rows = np.asarray(rows, dtype=np.int64)
        self.overrides = overrides or {}

    @property
    def n_rows(self):
        return len(self.rows)

    def column(self, fi):
        if fi in self.overrides:
            values, missing = self.overrides[fi]
        else:
            f = self.dataset.features[fi]
            values, missing = f.values, f.missing
        return values[self.rows], missing[self.rows]

    @property
    def labels(self):
        return self.dataset.labels[self.rows]


class Pipeline:
    """Imputation + one-hot + standardization, with statistics from one view.

    Numerical columns impute the train mean and standardize with train
    mean/std. Categorical columns one-hot over the frozen category set plus a
    dedicated missing slot; out-of-range codes encode as an all-zero block.
    """

    def __init__(self):
        self.stats = None

    def fit(self, view):
        stats = []
        for fi, f in enumerate(view.dataset.features):
            values, missing = view.column(fi)
            if f.kind == NUMERICAL:
                present = values[~missing]
                mean = float(present.mean()) if len(present) else 0.0
                std = float(present.std()) if len(present) else 0.0
                if std <= 1e-12:
                    std = 1.0
                stats.append((NUMERICAL, mean, std))
            else:
                stats.append((CATEGORICAL, len(f.categories), None))
        self.stats = stats
        return self

    @property
    def width(self):
        w = 0
        for kind, a, _ in self.stats:
            w += 1 if kind == NUMERICAL else a + 1
        return w

    def transform(self, view):
        if self.stats is None:
            raise RuntimeError("pipeline not fitted")
        n = view.n_rows
        out = np.zeros((n, self.width))
        col = 0
        for fi, (kind, a, b) in enumerate(self.stats):
            values, missing = view.column(fi)
            if kind == NUMERICAL:
                x = np.where(missing, a, values)
                out[:, col] = (x - a) / b
                col += 1
            else:
                codes = values.astype(np.int64)
                in_range = (~missing) & (codes >= 0) & (codes < a)
                rows = np.flatnonzero(in_range)
                out[rows, col + codes[rows]] = 1.0
                out[missing, col + a] = 1.0
                col += a + 1
        return out
