import numpy as np
import pytest

from cleanguide.harness import generate_synthetic
from cleanguide.tabular import (CATEGORICAL, NUMERICAL, Dataset, Feature,
                                split)


def make_dataset(numeric=None, categorical=None, labels=None, test_fraction=0.2,
                 seed=0, do_split=True, truth=False):
    """Hand-built dataset: numeric maps name -> values (nan means missing),
    categorical maps name -> list of category strings ('' means missing)."""
    features = []
    n = len(labels)
    for name, vals in (numeric or {}).items():
        vals = np.asarray(vals, dtype=np.float64)
        missing = np.isnan(vals)
        vals = np.where(missing, 0.0, vals)
        features.append(Feature(name, NUMERICAL, vals, missing))
    for name, tokens in (categorical or {}).items():
        cats = sorted({t for t in tokens if t != ""})
        code = {c: i for i, c in enumerate(cats)}
        missing = np.array([t == "" for t in tokens], dtype=bool)
        vals = np.array([0 if t == "" else code[t] for t in tokens],
                        dtype=np.int64)
        features.append(Feature(name, CATEGORICAL, vals, missing, cats))
    classes = sorted({str(l) for l in labels})
    lmap = {c: i for i, c in enumerate(classes)}
    ds = Dataset(features, classes,
                 np.array([lmap[str(l)] for l in labels], dtype=np.int64))
    if do_split:
        split(ds, test_fraction, seed)
    if truth:
        ds.enable_truth()
    return ds


def blob_labels(n, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    rng.shuffle(y)
    return y


@pytest.fixture
def small_synth():
    """400-row binary blob dataset, split and truth-enabled."""
    ds = generate_synthetic({"rows": 400, "informative": 2, "noise": 2,
                             "classes": 2, "seed": 11})
    return split(ds, 0.2, 7)


@pytest.fixture
def tiny_dataset():
    """12-row two-feature dataset for exact bookkeeping tests."""
    return make_dataset(
        numeric={"a": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]},
        categorical={"c": ["x", "y"] * 6},
        labels=[0, 1] * 6,
        seed=3,
    )


def knn_ladder_dataset(k_steps, missing_bit=1):
    """Single-feature 1-NN dataset where every cleaning step must raise F1.

    Class clusters sit 1000 apart. Exactly ``k_steps`` test cells are moved
    into the wrong cluster (each one a guaranteed misclassification) and
    4*k_steps train cells are parked in a desert where they attract nothing.
    One cleaning step restores 1 test + 4 train cells, so F1 rises stepwise
    until the feature is clean after exactly ``k_steps`` accepted steps.
    """
    n = 500
    labels = np.array([0, 1] * (n // 2))
    x = np.where(labels == 0, 0.0, 1000.0) + np.arange(n) * 0.001
    ds = make_dataset(numeric={"x": x}, labels=labels, seed=3)
    ds.enable_truth()
    fi = 0
    test_pool = [r for r in ds.test_idx if ds.labels[r] == 1]
    train_pool = [r for r in ds.train_idx if ds.labels[r] == 1]
    assert len(test_pool) >= k_steps and len(train_pool) >= 4 * k_steps
    bad_test = np.array(test_pool[:k_steps])
    bad_train = np.array(train_pool[:4 * k_steps])
    ds.features[fi].values[bad_test] = 50.5 + np.arange(k_steps) * 0.001
    ds.features[fi].values[bad_train] = 50_000.0 + np.arange(4 * k_steps)
    dirty = np.concatenate([bad_test, bad_train])
    ds.provenance[fi, dirty] = 1
    ds.error_marks[fi, dirty] = missing_bit
    return ds


def adversarial_dataset(n=300, dirty_fraction=0.8, seed=2):
    """Truth store that makes cleaning strictly lower F1.

    The frozen truth is anti-correlated with the labels; the dirty values are
    the correct ones. Restoring any test cell flips a confident right answer
    to a confident wrong one.
    """
    rng = np.random.default_rng(seed)
    labels = np.array([0, 1] * (n // 2))
    anti = np.where(labels == 0, 3.0, -3.0) + rng.normal(0, 0.1, n)
    ds = make_dataset(numeric={"x": anti}, labels=labels, seed=4)
    ds.enable_truth()
    fi = 0
    n_dirty = int(dirty_fraction * n)
    dirty = rng.choice(n, size=n_dirty, replace=False)
    good = np.where(ds.labels == 0, -3.0, 3.0) + rng.normal(0, 0.1, n)
    ds.features[fi].values[dirty] = good[dirty]
    ds.provenance[fi, dirty] = 1
    ds.error_marks[fi, dirty] = 1
    return ds
