"""Self-contained model zoo with a uniform fit/predict surface.

Every learner trains deterministically from a spec seed, consumes the
pipeline's dense float64 matrix, and exposes per-class decision scores.
The three linear learners additionally expose per-record loss gradients
for gradient-ranked record selection.
"""

import zlib
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .pipeline import Pipeline, TableView

KNN = "knn"
LOGISTIC_REGRESSION = "logreg"
LINEAR_SVM = "linear_svm"
GRADIENT_BOOSTING = "gboost"
MLP = "mlp"
LINEAR_REGRESSION = "linreg"

ALGORITHMS = (KNN, LOGISTIC_REGRESSION, LINEAR_SVM, GRADIENT_BOOSTING, MLP,
              LINEAR_REGRESSION)
GRADIENT_CAPABLE = (LOGISTIC_REGRESSION, LINEAR_SVM, LINEAR_REGRESSION)

LOGREG_ITERS, LOGREG_TOL = 50, 1e-10
SVM_LR, SVM_EPOCHS, SVM_TOL = 0.5, 800, 1e-10
MLP_LR, MLP_EPOCHS = 0.3, 150


class DegenerateLabelsError(ValueError):
    pass


class CapabilityError(TypeError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    algorithm: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def to_dict(self):
        return {"algorithm": self.algorithm, "seed": self.seed,
                "hyperparameters": dict(self.hyperparameters)}

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["algorithm"], dict(obj.get("hyperparameters", {})),
                   obj.get("seed", 0))


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class TrainedModel:
    """Fitted learner plus its pipeline; predict() is pure and reusable."""

    def __init__(self, spec, pipeline, n_classes, fingerprint):
        self.spec = spec
        self.pipeline = pipeline
        self.n_classes = n_classes
        self.fingerprint = fingerprint

    def predict(self, view):
        return np.argmax(self.decision_scores(view), axis=1).astype(np.int64)

    def decision_scores(self, view):
        return self.scores_x(self.pipeline.transform(view))

    def scores_x(self, x):
        raise NotImplementedError


class _KnnModel(TrainedModel):
    def __init__(self, spec, pipeline, n_classes, fingerprint, train_x, train_y, k):
        super().__init__(spec, pipeline, n_classes, fingerprint)
        self.train_x = train_x
        self.train_y = train_y
        self.k = min(k, len(train_y))

    def predict(self, view):
        x = self.pipeline.transform(view)
        return kernels.knn_predict(self.train_x, self.train_y, x, self.k,
                                   self.n_classes)

    def scores_x(self, x):
        d2 = (np.sum(x**2, axis=1)[:, None]
              + np.sum(self.train_x**2, axis=1)[None, :]
              - 2.0 * x @ self.train_x.T)
        order = np.argsort(d2, axis=1, kind="stable")[:, :self.k]
        votes = self.train_y[order]
        scores = np.zeros((len(x), self.n_classes))
        for c in range(self.n_classes):
            scores[:, c] = np.mean(votes == c, axis=1)
        return scores


class _LinearModel(TrainedModel):
    """Shared plumbing for the three gradient-capable linear learners.

    Weights are stored one row per trained head: a single head for binary
    problems, one-vs-rest heads otherwise.
    """

    kind = None

    def __init__(self, spec, pipeline, n_classes, fingerprint, weights, biases):
        super().__init__(spec, pipeline, n_classes, fingerprint)
        self.weights = weights
        self.biases = biases

    @property
    def params_flat(self):
        return np.concatenate(
            [np.append(w, b) for w, b in zip(self.weights, self.biases)])

    def _unflatten(self, params):
        d = self.weights.shape[1]
        per = d + 1
        heads = params.reshape(len(self.weights), per)
        return heads[:, :d], heads[:, d]

    def _head_targets(self, y):
        if len(self.weights) == 1:
            return np.asarray([float(y == 1)])
        return np.asarray([float(y == c) for c in range(self.n_classes)])

    def record_loss(self, x, y, params=None):
        w, b = (self.weights, self.biases) if params is None \
            else self._unflatten(params)
        z = w @ x + b
        return float(np.sum(self._head_loss(z, self._head_targets(y))))

    def record_gradient(self, x, y):
        z = self.weights @ x + self.biases
        coef = self._head_coef(z, self._head_targets(y))
        aug = np.append(x, 1.0)
        return np.concatenate([c * aug for c in coef])


class _LogisticModel(_LinearModel):
    def scores_x(self, x):
        z = x @ self.weights.T + self.biases
        if len(self.weights) == 1:
            p = _sigmoid(z[:, 0])
            return np.column_stack([1.0 - p, p])
        return _sigmoid(z)

    def _head_loss(self, z, t):
        p = _sigmoid(z)
        eps = 1e-12
        return -(t * np.log(p + eps) + (1.0 - t) * np.log(1.0 - p + eps))

    def _head_coef(self, z, t):
        return _sigmoid(z) - t


class _SvmModel(_LinearModel):
    def scores_x(self, x):
        z = x @ self.weights.T + self.biases
        if len(self.weights) == 1:
            return np.column_stack([-z[:, 0], z[:, 0]])
        return z

    def _head_loss(self, z, t):
        s = 2.0 * t - 1.0
        return np.maximum(0.0, 1.0 - s * z)

    def _head_coef(self, z, t):
        s = 2.0 * t - 1.0
        return np.where(s * z < 1.0, -s, 0.0)


class _LinregModel(_LinearModel):
    def scores_x(self, x):
        z = x @ self.weights.T + self.biases
        if len(self.weights) == 1:
            return np.column_stack([1.0 - z[:, 0], z[:, 0]])
        return z

    def _head_loss(self, z, t):
        return 0.5 * (z - t) ** 2

    def _head_coef(self, z, t):
        return z - t


class _BoostModel(TrainedModel):
    def __init__(self, spec, pipeline, n_classes, fingerprint, base, trees, lr):
        super().__init__(spec, pipeline, n_classes, fingerprint)
        self.base = base
        self.trees = trees
        self.lr = lr

    def _raw(self, x):
        n_heads = len(self.base)
        out = np.tile(self.base, (len(x), 1))
        for round_trees in self.trees:
            for h in range(n_heads):
                out[:, h] += self.lr * kernels.tree_predict(*round_trees[h], x)
        return out

    def scores_x(self, x):
        raw = self._raw(x)
        if raw.shape[1] == 1:
            p = _sigmoid(raw[:, 0])
            return np.column_stack([1.0 - p, p])
        return _softmax(raw)


class _MlpModel(TrainedModel):
    def __init__(self, spec, pipeline, n_classes, fingerprint, params):
        super().__init__(spec, pipeline, n_classes, fingerprint)
        self.w1, self.b1, self.w2, self.b2 = params

    def scores_x(self, x):
        hidden = np.maximum(0.0, x @ self.w1 + self.b1)
        return _softmax(hidden @ self.w2 + self.b2)


def _fingerprint(x, y):
    return zlib.crc32(x.tobytes()) ^ zlib.crc32(y.tobytes())


def fit(spec, view):
    """Train ``spec`` on the rows of ``view``; deterministic given the seed."""
    pipeline = Pipeline().fit(view)
    x = pipeline.transform(view)
    y = view.labels
    if len(np.unique(y)) < 2:
        raise DegenerateLabelsError("training rows cover fewer than two classes")
    n_classes = len(view.dataset.classes)
    fp = _fingerprint(x, y)
    hp = spec.hyperparameters
    alg = spec.algorithm

    if alg == KNN:
        return _KnnModel(spec, pipeline, n_classes, fp, x, y.copy(),
                         int(hp.get("k", 5)))

    if alg in (LOGISTIC_REGRESSION, LINEAR_SVM, LINEAR_REGRESSION):
        heads = [1] if n_classes == 2 else list(range(n_classes))
        weights, biases = [], []
        for c in heads:
            t = (y == c).astype(np.float64)
            if alg == LOGISTIC_REGRESSION:
                w, b = kernels.logistic_newton(x, t, float(hp.get("l2", 1e-3)),
                                               LOGREG_ITERS, LOGREG_TOL)
            elif alg == LINEAR_SVM:
                w, b = kernels.hinge_gd(x, 2.0 * t - 1.0, float(hp.get("c", 1.0)),
                                        SVM_LR, SVM_EPOCHS, SVM_TOL)
            else:
                ridge = float(hp.get("ridge", 1e-6))
                aug = np.column_stack([x, np.ones(len(x))])
                gram = aug.T @ aug + ridge * np.eye(aug.shape[1])
                sol = np.linalg.solve(gram, aug.T @ t)
                w, b = sol[:-1], sol[-1]
            weights.append(w)
            biases.append(b)
        cls = {LOGISTIC_REGRESSION: _LogisticModel, LINEAR_SVM: _SvmModel,
               LINEAR_REGRESSION: _LinregModel}[alg]
        return cls(spec, pipeline, n_classes, fp,
                   np.asarray(weights), np.asarray(biases))

    if alg == GRADIENT_BOOSTING:
        depth = int(hp.get("depth", 2))
        rounds = int(hp.get("rounds", 100))
        lr = float(hp.get("learning_rate", 0.1))
        min_leaf = 5
        n_heads = 1 if n_classes == 2 else n_classes
        if n_heads == 1:
            prior = np.clip(np.mean(y == 1), 1e-6, 1.0 - 1e-6)
            base = np.array([np.log(prior / (1.0 - prior))])
            targets = (y == 1).astype(np.float64)[None, :]
        else:
            base = np.array([np.log(max(np.mean(y == c), 1e-6))
                             for c in range(n_classes)])
            targets = np.asarray([(y == c).astype(np.float64)
                                  for c in range(n_classes)])
        raw = np.tile(base, (len(x), 1))
        trees = []
        for _ in range(rounds):
            if n_heads == 1:
                probs = _sigmoid(raw[:, :1])
            else:
                probs = _softmax(raw)
            round_trees = []
            for h in range(n_heads):
                grad = targets[h] - probs[:, h]
                nodes = kernels.tree_fit(x, grad, depth, min_leaf)
                raw[:, h] += lr * kernels.tree_predict(*nodes, x)
                round_trees.append(nodes)
            trees.append(round_trees)
        return _BoostModel(spec, pipeline, n_classes, fp, base, trees, lr)

    if alg == MLP:
        hidden = int(hp.get("hidden", 32))
        rng = np.random.default_rng(spec.seed)
        d = x.shape[1]
        w1 = rng.normal(0.0, np.sqrt(2.0 / d), size=(d, hidden))
        b1 = np.zeros(hidden)
        w2 = rng.normal(0.0, np.sqrt(2.0 / hidden), size=(hidden, n_classes))
        b2 = np.zeros(n_classes)
        onehot = np.eye(n_classes)[y]
        n = len(x)
        for _ in range(MLP_EPOCHS):
            a1 = np.maximum(0.0, x @ w1 + b1)
            probs = _softmax(a1 @ w2 + b2)
            d2 = (probs - onehot) / n
            gw2 = a1.T @ d2
            gb2 = d2.sum(axis=0)
            d1 = (d2 @ w2.T) * (a1 > 0.0)
            gw1 = x.T @ d1
            gb1 = d1.sum(axis=0)
            w1 -= MLP_LR * gw1
            b1 -= MLP_LR * gb1
            w2 -= MLP_LR * gw2
            b2 -= MLP_LR * gb2
        return _MlpModel(spec, pipeline, n_classes, fp, (w1, b1, w2, b2))

    raise CapabilityError(f"unknown algorithm {alg!r}")


def predict(model, view):
    if len(view.dataset.features) != len(model.pipeline.stats):
        raise ValueError("view schema does not match the training schema")
    return model.predict(view)


def per_record_gradient(model, x, label):
    """Gradient of the single-record loss at the model's current parameters.

    ``x`` is a pipeline-transformed feature vector; the returned vector spans
    every trained head's weights and bias.
    """
    if not isinstance(model, _LinearModel):
        raise CapabilityError(
            f"{model.spec.algorithm} has no per-record loss gradient")
    return model.record_gradient(x, label)


def per_record_loss(model, x, label, params=None):
    if not isinstance(model, _LinearModel):
        raise CapabilityError(
            f"{model.spec.algorithm} has no per-record loss")
    return model.record_loss(x, label, params)
