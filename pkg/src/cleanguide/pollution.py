"""Error injection: probe overlays, pre-pollution sampling, simulated cleaning."""

import json
from dataclasses import dataclass, field

import numpy as np

from .tabular import (CATEGORICAL, CLEAN, DIRTY_PRE, NUMERICAL, TEST, TRAIN,
                      Dataset)

#: cleaning/pollution step granularity: fraction of a split's rows
STEP = 0.01


class CompatibilityError(ValueError):
    pass


class PollutionError(ValueError):
    pass


class CatshiftImpossibleError(PollutionError):
    pass


@dataclass(frozen=True)
class ErrorType:
    name: str
    bit: int
    kinds: tuple

    def compatible(self, kind):
        return kind in self.kinds


MISSING_VALUES = ErrorType("missing_values", 1, (NUMERICAL, CATEGORICAL))
GAUSSIAN_NOISE = ErrorType("gaussian_noise", 2, (NUMERICAL,))
CATEGORICAL_SHIFT = ErrorType("categorical_shift", 4, (CATEGORICAL,))
SCALING = ErrorType("scaling", 8, (NUMERICAL,))

ERROR_TYPES = [MISSING_VALUES, GAUSSIAN_NOISE, CATEGORICAL_SHIFT, SCALING]
ERROR_BY_NAME = {e.name: e for e in ERROR_TYPES}

SCALING_FACTORS = np.array([10.0, 100.0, 1000.0])


def round_half_up(x):
    return int(np.floor(x + 0.5))


def compatible_errors(feature):
    errs = [e for e in ERROR_TYPES if e.compatible(feature.kind)]
    if feature.kind == CATEGORICAL and len(feature.categories) < 2:
        errs = [e for e in errs if e is not CATEGORICAL_SHIFT]
    return errs


# -- cell-level injectors ---------------------------------------------------
# Each one overwrites the selected cells with a concrete erroneous value, so
# gaussian/catshift/scaling clear the missing flag of any cell they hit.

def normal_draws(rng, n, sigma):
    """Seeded Box-Muller normals: reproducible from the raw uniform stream."""
    u1 = 1.0 - rng.random(n)
    u2 = rng.random(n)
    return sigma * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def inject_missing(values, missing, rows):
    missing[rows] = True


def inject_gaussian(values, missing, rows, sigma, rng):
    values[rows] += normal_draws(rng, len(rows), sigma)
    missing[rows] = False


def inject_catshift(values, missing, rows, n_categories, rng):
    if n_categories < 2:
        raise CatshiftImpossibleError(
            "cannot swap categories in a single-category feature")
    draw = rng.integers(0, n_categories - 1, size=len(rows))
    current = values[rows]
    values[rows] = np.where(draw >= current, draw + 1, draw)
    missing[rows] = False


def inject_scaling(values, missing, rows, rng):
    values[rows] *= SCALING_FACTORS[rng.integers(0, 3, size=len(rows))]
    missing[rows] = False


def _apply_error(err, values, missing, rows, rng, categories=None, sigma=None):
    if err is MISSING_VALUES:
        inject_missing(values, missing, rows)
    elif err is GAUSSIAN_NOISE:
        inject_gaussian(values, missing, rows,
                        rng.uniform(1.0, 5.0) if sigma is None else sigma, rng)
    elif err is CATEGORICAL_SHIFT:
        inject_catshift(values, missing, rows, len(categories), rng)
    elif err is SCALING:
        inject_scaling(values, missing, rows, rng)
    else:
        raise CompatibilityError(f"unknown error type {err!r}")


# -- probing overlays ---------------------------------------------------------

@dataclass
class PollutedState:
    """Copy-on-write overlay of one feature column at an added pollution level."""

    feature: int
    error_type: ErrorType
    level: float
    combination: int
    values: np.ndarray
    missing: np.ndarray
    touched: dict  # split name -> global row indices

    def overrides(self):
        return {self.feature: (self.values, self.missing)}


def pollute(dataset, feature, err, level, combination=0, seed=0):
    """Build an overlay with ``level`` of each split's rows additionally polluted.

    Cells are drawn uniformly per split, so already-dirty cells may be hit
    again and the net increase in dirt can fall short of the request. The
    base dataset is never touched.
    """
    fi = feature if isinstance(feature, int) else dataset.feature_index(feature)
    col = dataset.features[fi]
    if not err.compatible(col.kind):
        raise CompatibilityError(
            f"{err.name} cannot be injected into {col.kind} feature {col.name!r}")
    if not 0.0 < level <= 1.0:
        raise PollutionError(f"pollution level {level} outside (0, 1]")

    key = (list(seed) if isinstance(seed, (list, tuple)) else [seed])
    rng = np.random.default_rng([int(k) for k in key] + [combination, fi])
    values = col.values.copy()
    missing = col.missing.copy()
    # one noise spread per call: the same faulty source hits every selected cell
    sigma = rng.uniform(1.0, 5.0) if err is GAUSSIAN_NOISE else None
    touched = {}
    for split in (TRAIN, TEST):
        rows = dataset.split_rows(split)
        n_sel = round_half_up(level * len(rows))
        if n_sel == 0:
            raise PollutionError(
                f"level {level} selects zero cells on the {split} split")
        sel = np.sort(rng.choice(rows, size=n_sel, replace=False))
        _apply_error(err, values, missing, sel, rng,
                     categories=col.categories, sigma=sigma)
        touched[split] = sel
    return PollutedState(fi, err, level, combination, values, missing, touched)


# -- pre-pollution ------------------------------------------------------------

@dataclass
class PrePollutionSetting:
    """Sampled per-feature dirtiness profile applied before any method runs."""

    levels: dict
    step_errors: dict = field(default_factory=dict)
    single_error: str = None
    seed: int = 0

    def errors_for(self, name):
        if self.single_error is not None:
            steps = round_half_up(self.levels[name] / STEP)
            return [self.single_error] * steps
        return self.step_errors[name]

    def to_json(self):
        return json.dumps({
            "levels": self.levels,
            "step_errors": self.step_errors,
            "single_error": self.single_error,
            "seed": self.seed,
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(levels=obj["levels"], step_errors=obj.get("step_errors", {}),
                   single_error=obj.get("single_error"), seed=obj.get("seed", 0))


def sample_capped_exponential(n, mean_level, cap, rng):
    if mean_level <= 0:
        raise ValueError("mean_level must be positive")
    if cap > 0.5:
        raise ValueError("cap must not exceed 0.5")
    return np.minimum(cap, rng.exponential(mean_level, size=n))


def sample_pre_pollution(features, mean_level, cap, multi_error, seed,
                         error_type=None):
    """Draw per-feature target levels (capped exponential, floored to STEP).

    Multi-error mode assigns each 1% step an independently drawn compatible
    error type; single-error mode records the externally supplied type and
    skips incompatible features.
    """
    rng = np.random.default_rng(seed)
    raw = sample_capped_exponential(len(features), mean_level, cap, rng)
    levels = {}
    step_errors = {}
    for f, r in zip(features, raw):
        level = np.floor(r / STEP) * STEP
        if multi_error:
            errs = compatible_errors(f)
            steps = round_half_up(level / STEP)
            step_errors[f.name] = [errs[rng.integers(0, len(errs))].name
                                   for _ in range(steps)]
            levels[f.name] = float(level)
        else:
            if error_type is None:
                raise ValueError("single-error sampling needs an error type")
            if not error_type.compatible(f.kind) or (
                    error_type is CATEGORICAL_SHIFT and len(f.categories) < 2):
                levels[f.name] = 0.0
            else:
                levels[f.name] = float(level)
    return PrePollutionSetting(
        levels=levels, step_errors=step_errors,
        single_error=None if multi_error else error_type.name, seed=seed)


def apply_pre_pollution(dataset, setting):
    """Dirty a pristine dataset in place, one 1% step at a time per feature.

    Fills the truth store first so simulated cleaning can undo everything.
    Train and test splits receive the same level independently.
    """
    if (dataset.provenance != CLEAN).any():
        raise PollutionError("dataset already carries dirty cells")
    dataset.enable_truth()
    for fi, col in enumerate(dataset.features):
        name = col.name
        if name not in setting.levels or setting.levels[name] <= 0.0:
            continue
        rng = np.random.default_rng([setting.seed, fi])
        for err_name in setting.errors_for(name):
            err = ERROR_BY_NAME[err_name]
            sigma = rng.uniform(1.0, 5.0) if err is GAUSSIAN_NOISE else None
            for split in (TRAIN, TEST):
                rows = dataset.split_rows(split)
                n_sel = round_half_up(STEP * len(rows))
                if n_sel == 0:
                    raise PollutionError(
                        f"{split} split too small for a {STEP:.0%} step")
                sel = rng.choice(rows, size=n_sel, replace=False)
                _apply_error(err, col.values, col.missing, sel, rng,
                             categories=col.categories, sigma=sigma)
                dataset.provenance[fi, sel] = DIRTY_PRE
                dataset.error_marks[fi, sel] |= err.bit


# -- simulated cleaning --------------------------------------------------------

def clean_cells(dataset, feature, rows):
    """Restore the listed cells to their ground-truth values.

    Returns how many cells actually changed; cleaning an already-clean cell
    is a counted-as-zero no-op.
    """
    if not dataset.simulation_mode:
        raise PollutionError("cleaning from truth needs simulation mode")
    fi = feature if isinstance(feature, int) else dataset.feature_index(feature)
    col = dataset.features[fi]
    rows = np.asarray(rows, dtype=np.int64)
    if len(rows) and (rows.min() < 0 or rows.max() >= dataset.n_rows):
        raise IndexError("cell index out of range")
    truth_v = dataset.truth_values[fi][rows]
    truth_m = dataset.truth_missing[fi][rows]
    changed = int(np.sum((col.values[rows] != truth_v)
                         | (col.missing[rows] != truth_m)))
    col.values[rows] = truth_v
    col.missing[rows] = truth_m
    dataset.provenance[fi, rows] = CLEAN
    dataset.error_marks[fi, rows] = 0
    return changed


def clean_everything(dataset):
    """Restore every feature to ground truth (the fully-cleaned reference)."""
    total = 0
    for fi in range(dataset.n_features):
        total += clean_cells(dataset, fi, np.arange(dataset.n_rows))
    return total
