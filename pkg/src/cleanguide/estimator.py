"""Cleaning-impact estimation: probe a feature with extra errors, measure the
accuracy decay, and extrapolate one cleaning step backwards with a Bayesian
line fit whose predictive interval doubles as the uncertainty signal."""

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import models
from .metrics import score_labels
from .pollution import STEP, pollute
from .tabular import TEST, TRAIN

PRIOR_PRECISION = 1e-8
PRIOR_A = 1e-6
PRIOR_B = 1e-6
CREDIBLE_MASS = 0.95

#: added pollution levels probed per feature (two steps beyond the current state)
PROBE_LEVELS = (STEP, 2 * STEP)
DEFAULT_COMBOS = 3


class EstimationError(RuntimeError):
    pass


class RankDeficiencyError(ValueError):
    pass


@dataclass
class AccuracySamples:
    """Measured F1 per added pollution level, plus the overlays that caused it."""

    feature: int
    error_type: object
    points: list  # (added level, combination, f1)
    states: list  # probe overlays; their touched cells form the priority list

    def priority_cells(self, split):
        """Cells the probes touched, deduplicated, in first-touch order."""
        seen = []
        have = set()
        for st in self.states:
            for r in st.touched[split]:
                if int(r) not in have:
                    have.add(int(r))
                    seen.append(int(r))
        return np.asarray(seen, dtype=np.int64)

    def to_dict(self):
        return {
            "feature": self.feature,
            "error_type": self.error_type.name,
            "points": [[level, combo, f1] for level, combo, f1 in self.points],
            "priority_cells": {split: self.priority_cells(split).tolist()
                               for split in (TRAIN, TEST)},
        }


@dataclass
class Posterior:
    coef_mean: np.ndarray
    cov_scale: np.ndarray  # inverse posterior precision of the line coefficients
    a: float
    b: float


@dataclass
class Prediction:
    feature: int
    error_type: object
    predicted_f1: float
    uncertainty: float
    posterior: Posterior = None

    def to_dict(self):
        return {"feature": self.feature, "error_type": self.error_type.name,
                "predicted_f1": self.predicted_f1,
                "uncertainty": self.uncertainty}


def measure_current_f1(dataset, model_spec, overrides=None):
    train = models.TableView(dataset, dataset.split_rows(TRAIN), overrides)
    test = models.TableView(dataset, dataset.split_rows(TEST), overrides)
    model = models.fit(model_spec, train)
    return score_labels(dataset, test.labels, model.predict(test))


def measure_pollution_effect(dataset, feature, error_type, model_spec,
                             combos=DEFAULT_COMBOS, seed=0,
                             levels=PROBE_LEVELS, base_f1=None):
    """Measure test F1 at the current state and at each added pollution level.

    Each (level, combination) pair gets an independently drawn overlay;
    train and test splits are polluted separately inside each overlay. The
    base dataset is never mutated. ``base_f1`` skips remeasuring the shared
    current-state point when the caller already has it.
    """
    fi = feature if isinstance(feature, int) else dataset.feature_index(feature)
    seed_key = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    if base_f1 is None:
        base_f1 = measure_current_f1(dataset, model_spec)
    points = [(0.0, 0, base_f1)]
    states = []
    for li, level in enumerate(levels):
        for c in range(1, combos + 1):
            state = pollute(dataset, fi, error_type, level,
                            combination=c, seed=seed_key + [li])
            try:
                f1 = measure_current_f1(dataset, model_spec, state.overrides())
            except models.DegenerateLabelsError as exc:
                raise EstimationError(
                    f"model fit failed on overlay f={fi} level={level} "
                    f"combination={c}: {exc}") from exc
            points.append((level, c, f1))
            states.append(state)
    return AccuracySamples(fi, error_type, points, states)


def _nig_posterior(x, y):
    """Conjugate update for y = b0 + b1*x with unknown noise variance.

    The covariate is measured in cleaning-step units (level / STEP) so the
    design matrix is well scaled against the weak prior.
    """
    design = np.column_stack([np.ones(len(x)), x])
    lam0 = PRIOR_PRECISION * np.eye(2)
    lam_n = lam0 + design.T @ design
    coef = np.linalg.solve(lam_n, design.T @ y)
    a_n = PRIOR_A + len(y) / 2.0
    b_n = PRIOR_B + 0.5 * (y @ y - coef @ lam_n @ coef)
    b_n = max(b_n, 1e-300)
    return Posterior(coef, np.linalg.inv(lam_n), a_n, b_n)


def predictive_interval(post, x_star, mass=CREDIBLE_MASS):
    """Mean and central-credible-interval width of the posterior predictive."""
    row = np.array([1.0, x_star])
    mean = float(row @ post.coef_mean)
    scale2 = post.b / post.a * (1.0 + row @ post.cov_scale @ row)
    quantile = stats.t.ppf(0.5 + mass / 2.0, df=2.0 * post.a)
    width = 2.0 * quantile * float(np.sqrt(scale2))
    return mean, width


def fit_predict(samples):
    """Extrapolate the measured decay one cleaning step ahead (level -STEP)."""
    levels = np.array([p[0] for p in samples.points])
    f1s = np.array([p[2] for p in samples.points])
    if len(levels) < 3:
        raise ValueError("need at least three measured points")
    if len(np.unique(levels)) < 2:
        raise RankDeficiencyError("all points share one pollution level")
    post = _nig_posterior(levels / STEP, f1s)
    mean, width = predictive_interval(post, -1.0)
    return Prediction(samples.feature, samples.error_type, mean, width, post)


class DiscrepancyLog:
    """Append-only (predicted, actual) pairs per feature and error type."""

    def __init__(self):
        self.entries = {}

    @staticmethod
    def _key(feature, error_type):
        name = error_type if isinstance(error_type, str) else error_type.name
        return (int(feature), name)

    def record(self, feature, error_type, predicted, actual):
        self.entries.setdefault(self._key(feature, error_type), []).append(
            (float(predicted), float(actual)))

    def shift(self, feature, error_type):
        pairs = self.entries.get(self._key(feature, error_type), [])
        if not pairs:
            return 0.0
        return float(np.mean([a - p for p, a in pairs]))

    def pairs(self):
        return [pair for plist in self.entries.values() for pair in plist]

    def to_dict(self):
        return {f"{fi}:{name}": pairs
                for (fi, name), pairs in self.entries.items()}

    @classmethod
    def from_dict(cls, obj):
        log = cls()
        for key, pairs in obj.items():
            fi, name = key.split(":", 1)
            log.entries[(int(fi), name)] = [tuple(map(float, p)) for p in pairs]
        return log


def record_outcome(log, feature, error_type, predicted, actual):
    if not (0.0 <= predicted <= 1.0 and 0.0 <= actual <= 1.0):
        raise ValueError("predicted and actual F1 must lie in [0, 1]")
    log.record(feature, error_type, predicted, actual)


def adjust(prediction, log):
    """Shift the prediction by the mean past discrepancy, then clamp to [0,1]."""
    shift = log.shift(prediction.feature, prediction.error_type)
    adjusted = min(1.0, max(0.0, prediction.predicted_f1 + shift))
    return Prediction(prediction.feature, prediction.error_type, adjusted,
                      prediction.uncertainty, prediction.posterior)
