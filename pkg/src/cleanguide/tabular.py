"""Columnar dataset with per-cell provenance, truth store, and snapshot/restore."""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

NUMERICAL = "numerical"
CATEGORICAL = "categorical"

# per-cell provenance marks
CLEAN = 0
DIRTY_PRE = 1   # dirty at ingestion or injected before a session started
DIRTY_TEMP = 2  # temporarily polluted while probing a feature

TRAIN = "train"
TEST = "test"


class ParseError(ValueError):
    """Malformed CSV content; carries row/column context in the message."""


class SchemaError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


class StratificationError(ValueError):
    pass


@dataclass
class Feature:
    """One column: float64 values for numerical, int64 category codes for categorical.

    Missing cells keep a placeholder value (0.0 / code 0) and set the missing flag,
    so stored values are always finite.
    """

    name: str
    kind: str
    values: np.ndarray
    missing: np.ndarray
    categories: list = field(default_factory=list)

    def copy(self):
        return Feature(self.name, self.kind, self.values.copy(),
                       self.missing.copy(), list(self.categories))


@dataclass
class Snapshot:
    """Copy of a dataset's mutable state; restore() puts every cell back."""

    signature: tuple
    values: list
    missing: list
    provenance: np.ndarray
    error_marks: np.ndarray


class Dataset:
    """Typed feature columns plus labels, split indices, and dirt bookkeeping.

    ``provenance[f, r]`` marks cell dirtiness; ``error_marks[f, r]`` is a bitmask
    of the error kinds that dirtied the cell (simulation bookkeeping only). The
    truth store, when enabled, freezes the current values as ground truth so
    simulated cleaning can restore them later.
    """

    def __init__(self, features, classes, labels, positive_label=None):
        self.features = list(features)
        self.classes = list(classes)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.positive_label = positive_label
        n = len(self.labels)
        for f in self.features:
            if len(f.values) != n or len(f.missing) != n:
                raise ShapeMismatchError(
                    f"feature {f.name!r} has {len(f.values)} cells for {n} labels")
        self.provenance = np.zeros((len(self.features), n), dtype=np.int8)
        self.error_marks = np.zeros((len(self.features), n), dtype=np.uint8)
        self.train_idx = None
        self.test_idx = None
        self.truth_values = None
        self.truth_missing = None

    # -- basic shape ------------------------------------------------------

    @property
    def n_rows(self):
        return len(self.labels)

    @property
    def n_features(self):
        return len(self.features)

    def feature_index(self, name):
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(f"no feature named {name!r}")

    def split_rows(self, split):
        if self.train_idx is None:
            raise SchemaError("dataset has no train/test split yet")
        return self.train_idx if split == TRAIN else self.test_idx

    def signature(self):
        return tuple((f.name, f.kind, len(f.values)) for f in self.features)

    # -- truth store (simulation mode) -------------------------------------

    @property
    def simulation_mode(self):
        return self.truth_values is not None

    def enable_truth(self):
        """Freeze the current cell values as ground truth."""
        self.truth_values = [f.values.copy() for f in self.features]
        self.truth_missing = [f.missing.copy() for f in self.features]

    # -- dirt bookkeeping ---------------------------------------------------

    def dirty_mask(self, fi):
        return self.provenance[fi] != CLEAN

    def dirty_rows(self, fi, split=None):
        mask = self.dirty_mask(fi)
        if split is None:
            return np.flatnonzero(mask)
        rows = self.split_rows(split)
        return rows[mask[rows]]

    def fully_clean_rows(self):
        """Rows with no dirty cell in any feature."""
        return np.flatnonzero((self.provenance != CLEAN).sum(axis=0) == 0)

    # -- snapshot / restore -------------------------------------------------

    def snapshot(self):
        return Snapshot(
            signature=self.signature(),
            values=[f.values.copy() for f in self.features],
            missing=[f.missing.copy() for f in self.features],
            provenance=self.provenance.copy(),
            error_marks=self.error_marks.copy(),
        )

    def restore(self, snap):
        if snap.signature != self.signature():
            raise ShapeMismatchError("snapshot does not match dataset shape")
        for f, vals, miss in zip(self.features, snap.values, snap.missing):
            f.values[:] = vals
            f.missing[:] = miss
        self.provenance[:] = snap.provenance
        self.error_marks[:] = snap.error_marks

    def copy(self):
        ds = Dataset([f.copy() for f in self.features], self.classes,
                     self.labels.copy(), self.positive_label)
        ds.provenance = self.provenance.copy()
        ds.error_marks = self.error_marks.copy()
        ds.train_idx = None if self.train_idx is None else self.train_idx.copy()
        ds.test_idx = None if self.test_idx is None else self.test_idx.copy()
        if self.truth_values is not None:
            ds.truth_values = [v.copy() for v in self.truth_values]
            ds.truth_missing = [m.copy() for m in self.truth_missing]
        return ds


def load_schema(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_csv(path, schema):
    """Ingest a CSV file per the sidecar schema; see :func:`loads_csv`."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return _ingest(csv.reader(fh), schema)


def loads_csv(text, schema):
    """Ingest CSV text per the sidecar schema.

    ``schema`` is a dict: ``columns`` maps column name to kind, ``label`` names
    the label column, ``missing_tokens`` lists strings read as missing. Cells
    matching a missing token are flagged missing and marked dirty; category
    sets grow with every new value seen ("extend" policy) and are sorted once
    ingestion finishes.
    """
    return _ingest(csv.reader(io.StringIO(text)), schema)


def _ingest(reader, schema):
    columns = schema.get("columns", {})
    label_col = schema.get("label")
    missing_tokens = set(schema.get("missing_tokens", [""]))
    if label_col is None:
        raise SchemaError("schema does not name a label column")

    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("file is empty (no header row)") from None
    if label_col not in header:
        raise SchemaError(f"label column {label_col!r} not in header")
    for name in columns:
        if name not in header:
            raise SchemaError(f"schema column {name!r} not in header")
    feature_names = [h for h in header if h != label_col and h in columns]

    raw = {name: [] for name in feature_names}
    raw_labels = []
    for rownum, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ParseError(
                f"row {rownum}: expected {len(header)} fields, got {len(row)}")
        rec = dict(zip(header, row))
        if rec[label_col] in missing_tokens:
            raise ParseError(f"row {rownum}: missing label value")
        raw_labels.append(rec[label_col])
        for name in feature_names:
            raw[name].append(rec[name])

    n = len(raw_labels)
    features = []
    dirty = []
    for name in feature_names:
        kind = columns[name]
        tokens = raw[name]
        miss = np.array([t in missing_tokens for t in tokens], dtype=bool)
        if kind == NUMERICAL:
            vals = np.zeros(n, dtype=np.float64)
            for i, t in enumerate(tokens):
                if miss[i]:
                    continue
                try:
                    v = float(t)
                except ValueError:
                    raise ParseError(
                        f"row {i + 2}, column {name!r}: non-numeric value {t!r}") from None
                if not np.isfinite(v):
                    raise ParseError(
                        f"row {i + 2}, column {name!r}: non-finite value {t!r}")
                vals[i] = v
            features.append(Feature(name, NUMERICAL, vals, miss))
        elif kind == CATEGORICAL:
            cats = sorted({t for i, t in enumerate(tokens) if not miss[i]})
            code = {c: i for i, c in enumerate(cats)}
            vals = np.array([0 if miss[i] else code[t]
                             for i, t in enumerate(tokens)], dtype=np.int64)
            features.append(Feature(name, CATEGORICAL, vals, miss, cats))
        else:
            raise SchemaError(f"column {name!r}: unknown kind {kind!r}")
        dirty.append(miss)

    classes = sorted(set(raw_labels))
    code = {c: i for i, c in enumerate(classes)}
    labels = np.array([code[t] for t in raw_labels], dtype=np.int64)
    ds = Dataset(features, classes, labels, schema.get("positive_label"))
    for fi, miss in enumerate(dirty):
        ds.provenance[fi, miss] = DIRTY_PRE
        from .pollution import MISSING_VALUES  # late import, avoids a cycle
        ds.error_marks[fi, miss] |= MISSING_VALUES.bit
    return ds


def split(dataset, test_fraction=0.2, seed=0):
    """Stratified train/test split; same seed yields the same partition."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in range(len(dataset.classes)):
        rows = np.flatnonzero(dataset.labels == c)
        if len(rows) < 2:
            raise StratificationError(
                f"class {dataset.classes[c]!r} has {len(rows)} row(s); "
                "need at least one per part")
        rows = rows[rng.permutation(len(rows))]
        n_test = int(np.floor(test_fraction * len(rows) + 0.5))
        n_test = min(max(n_test, 1), len(rows) - 1)
        test.append(rows[:n_test])
        train.append(rows[n_test:])
    dataset.train_idx = np.sort(np.concatenate(train))
    dataset.test_idx = np.sort(np.concatenate(test))
    return dataset


def export_csv(dataset, path, missing_token=""):
    """Write the current cell values back out; missing cells get the token."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f.name for f in dataset.features] + ["label"])
        for r in range(dataset.n_rows):
            row = []
            for f in dataset.features:
                if f.missing[r]:
                    row.append(missing_token)
                elif f.kind == NUMERICAL:
                    row.append(repr(float(f.values[r])))
                else:
                    row.append(f.categories[int(f.values[r])])
            row.append(dataset.classes[int(dataset.labels[r])])
            writer.writerow(row)
