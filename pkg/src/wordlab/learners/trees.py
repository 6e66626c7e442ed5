"""CART trees, bagged/randomized forests, AdaBoost and gradient boosting.

Splits are axis-aligned ``x[f] <= t``. Equal split quality is resolved by
the lower feature index, then the lower threshold.
"""
import math

import numpy as np

from ..errors import ParameterError, ShapeError
from ..seeding import derive_seed, make_rng
from . import _treekernel as K


def label_targets(Y):
    """CSR targets for a 0/1 label matrix: one entry per positive label."""
    Y = np.asarray(Y)
    rows, cols = np.nonzero(Y)
    ptr = np.zeros(Y.shape[0] + 1, np.int64)
    np.cumsum(np.bincount(rows, minlength=Y.shape[0]), out=ptr[1:])
    return ptr, cols.astype(np.int32), np.ones(len(cols))


def value_targets(y):
    """CSR targets for a single real-valued output."""
    y = np.asarray(y, dtype=np.float64)
    return np.arange(len(y) + 1, dtype=np.int64), np.zeros(len(y), np.int32), y.copy()


def presort(X, active=None):
    """Per-feature ascending order of the active rows, shape ``(n, n_active)``."""
    if active is None:
        active = np.arange(X.shape[0])
    dtype = np.int32 if X.shape[0] < 2**31 else np.int64
    local = np.argsort(X[active].T, axis=1, kind="stable")
    return np.ascontiguousarray(active[local].astype(dtype))


class Tree:
    """A fitted binary tree. Leaves hold sparse per-output mean target values."""

    def __init__(self, arrays, n_out):
        (self.feature, self.threshold, self.left, self.right, self.leaf_start,
         self.leaf_end, self.leaf_idx, self.leaf_val, self.node_depth) = arrays
        self.n_out = n_out

    @property
    def node_count(self):
        return len(self.feature)

    @property
    def depth(self):
        return int(self.node_depth.max())

    def apply(self, X):
        return K.apply(np.ascontiguousarray(X, dtype=np.float64),
                       self.feature, self.threshold, self.left, self.right)

    def accumulate(self, X, out, scale=1.0):
        K.accumulate(X, self.feature, self.threshold, self.left, self.right,
                     self.leaf_start, self.leaf_end, self.leaf_idx, self.leaf_val,
                     out, scale)

    def predict(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros((X.shape[0], self.n_out))
        self.accumulate(X, out)
        return out

    def leaf_value(self, node):
        dense = np.zeros(self.n_out)
        sl = slice(self.leaf_start[node], self.leaf_end[node])
        dense[self.leaf_idx[sl]] = self.leaf_val[sl]
        return dense

    def decision_path_lengths(self, X):
        """Number of threshold comparisons made for each row."""
        return self.node_depth[self.apply(X)]


def fit_tree(X, Y, criterion="gini", max_depth=None, min_samples_leaf=1,
             max_features=None, splitter="best", sample_weight=None, seed=0,
             order=None):
    """Grow one tree.

    ``criterion="gini"`` takes a 0/1 label matrix (multi-output when it has
    several columns); ``criterion="mse"`` takes a single real target vector.
    ``splitter="random"`` draws one uniform threshold per candidate feature.
    ``order`` may carry a precomputed :func:`presort` of the active rows and
    is modified in place unless ``max_depth <= 1``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError("X must be a nonempty 2-D array")
    if criterion == "gini":
        Y = np.asarray(Y)
        if Y.ndim == 1:
            Y = Y[:, None]
        if not np.isin(Y, (0, 1)).all():
            raise ParameterError("gini criterion needs 0/1 targets")
        targets, n_out = label_targets(Y), Y.shape[1]
    elif criterion == "mse":
        Y = np.asarray(Y, dtype=np.float64)
        if Y.ndim != 1:
            raise ShapeError("mse criterion takes a single target vector")
        targets, n_out = value_targets(Y), 1
    else:
        raise ParameterError(f"unknown criterion {criterion!r}")
    if Y.shape[0] != X.shape[0]:
        raise ShapeError("X and targets disagree in row count")
    if splitter not in ("best", "random"):
        raise ParameterError(f"unknown splitter {splitter!r}")
    if min_samples_leaf < 1:
        raise ParameterError("min_samples_leaf must be >= 1")
    n = X.shape[1]
    max_features = n if max_features is None else int(max_features)
    if not 1 <= max_features <= n:
        raise ParameterError(f"max_features must lie in [1, {n}]")
    if sample_weight is None:
        w = np.ones(X.shape[0])
    else:
        w = np.asarray(sample_weight, dtype=np.float64)
        if w.shape != (X.shape[0],) or (w < 0).any():
            raise ParameterError("sample_weight must be a nonnegative vector per row")
    if order is None:
        active = np.flatnonzero(w > 0)
        if len(active) == 0:
            raise ParameterError("no sample carries positive weight")
        order = presort(X, active)
    depth = -1 if max_depth is None else int(max_depth)
    arrays = K.grow(X, order, w, *targets, n_out, depth, int(min_samples_leaf),
                    max_features, splitter == "random", np.uint64(seed))
    return Tree(arrays, n_out)


def default_max_features(n):
    return max(1, math.ceil(math.sqrt(n)))


class ForestModel:
    """Averaged multi-output trees; a word is positive when the mean leaf
    frequency across trees exceeds one half."""

    def __init__(self, trees, n_out, bootstrap, max_features, seed):
        if not trees:
            raise ParameterError("a forest needs at least one tree")
        self.trees = list(trees)
        self.n_out = n_out
        self.bootstrap = bootstrap
        self.max_features = max_features
        self.seed = seed

    @property
    def tree_count(self):
        return len(self.trees)

    def predict_proba(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros((X.shape[0], self.n_out))
        for tree in self.trees:
            tree.accumulate(X, out)
        return out / len(self.trees)


def fit_forest(X, Y, tree_count=100, bootstrap=True, max_features=None,
               splitter="best", max_depth=None, min_samples_leaf=1, seed=0):
    """RandomForest: ``bootstrap=True, splitter="best"``;
    ExtraTrees: ``bootstrap=False, splitter="random"``."""
    if int(tree_count) != tree_count or tree_count < 1:
        raise ParameterError(f"tree_count must be >= 1, got {tree_count}")
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    n_rows, n = X.shape
    if max_features is None:
        max_features = default_max_features(n)
    full_order = None if bootstrap else presort(X)
    trees = []
    for t in range(int(tree_count)):
        tree_seed = derive_seed(seed, "tree", t)
        if bootstrap:
            draws = make_rng(tree_seed).integers(n_rows, size=n_rows)
            weight = np.bincount(draws, minlength=n_rows).astype(np.float64)
            order = None
        else:
            weight = None
            order = full_order.copy()
        trees.append(fit_tree(X, Y, "gini", max_depth, min_samples_leaf, max_features,
                              splitter, weight, tree_seed, order))
    return ForestModel(trees, Y.shape[1], bootstrap, max_features, seed)


class AdaBoostModel:
    """Discrete AdaBoost. The score is the weighted vote ``sum_t a_t h_t(x)``
    with ``h_t`` in {-1, +1}; positive means the word is predicted."""

    def __init__(self, stages, alphas, weight_history=None):
        self.stages = stages
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.weight_history = weight_history or []

    def decision_function(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        score = np.zeros(X.shape[0])
        for tree, alpha in zip(self.stages, self.alphas):
            score += alpha * _vote(tree, X)
        return score


def _vote(tree, X):
    return np.where(tree.predict(X)[:, 0] > 0.5, 1.0, -1.0)


# weighted error is clipped here so a perfect weak learner gets a finite weight
_ERR_FLOOR = 1e-10


def fit_adaboost(X, y, stages=100, stump_depth=1, seed=0, keep_weights=False):
    """Discrete AdaBoost on 0/1 labels.

    Stage weight ``a = 0.5 * ln((1 - err) / err)``. Boosting stops early when
    a weak learner is no better than chance (``err >= 0.5``, stage discarded)
    or perfect (``err == 0``, stage kept).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ShapeError("y must be a vector with one entry per row")
    if not np.isin(y, (0, 1)).all():
        raise ParameterError("AdaBoost needs 0/1 labels")
    if y.min() == y.max():
        raise ParameterError("AdaBoost needs both classes present")
    sign = np.where(y == 1, 1.0, -1.0)
    w = np.full(X.shape[0], 1.0 / X.shape[0])
    order = presort(X)
    trees, alphas, history = [], [], []
    for t in range(int(stages)):
        stage_order = order if stump_depth <= 1 else order.copy()
        tree = fit_tree(X, y, "gini", stump_depth, 1, None, "best", w,
                        derive_seed(seed, "stage", t), stage_order)
        h = _vote(tree, X)
        miss = h != sign
        err = float(w[miss].sum())
        if err >= 0.5:
            break
        alpha = 0.5 * math.log((1.0 - max(err, _ERR_FLOOR)) / max(err, _ERR_FLOOR))
        trees.append(tree)
        alphas.append(alpha)
        if err == 0.0:
            break
        w = w * np.exp(-alpha * sign * h)
        w /= w.sum()
        if keep_weights:
            history.append(w.copy())
    return AdaBoostModel(trees, alphas, history)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class GradBoostModel:
    def __init__(self, init_score, learning_rate, trees):
        self.init_score = init_score
        self.learning_rate = learning_rate
        self.trees = trees

    def raw_score(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.full((X.shape[0], 1), self.init_score)
        for tree in self.trees:
            tree.accumulate(X, out, self.learning_rate)
        return out[:, 0]

    def predict_proba(self, X):
        return _sigmoid(self.raw_score(X))


def logistic_loss(y, raw):
    """Mean negative log-likelihood of 0/1 labels under logits ``raw``."""
    return float(np.mean(np.logaddexp(0.0, raw) - y * raw))


def fit_gradboost(X, y, stages=100, learning_rate=0.1, tree_depth=3, seed=0,
                  loss_trace=None):
    """Gradient boosting of regression trees on the logistic loss.

    Starts at the log-odds of the positive rate; every stage fits a tree to
    the residuals ``y - sigmoid(F)`` and adds ``learning_rate`` times it.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ShapeError("y must be a vector with one entry per row")
    if not np.isin(y, (0, 1)).all():
        raise ParameterError("gradient boosting needs 0/1 labels")
    rate = y.mean()
    if rate in (0.0, 1.0):
        raise ParameterError("gradient boosting needs both classes present")
    init = math.log(rate / (1.0 - rate))
    raw = np.full(X.shape[0], init)
    order = presort(X)
    trees = []
    if loss_trace is not None:
        loss_trace.append(logistic_loss(y, raw))
    for t in range(int(stages)):
        if learning_rate == 0.0:
            break
        residual = y - _sigmoid(raw)
        stage_order = order if tree_depth <= 1 else order.copy()
        tree = fit_tree(X, residual, "mse", tree_depth, 1, None, "best", None,
                        derive_seed(seed, "stage", t), stage_order)
        trees.append(tree)
        update = np.zeros((X.shape[0], 1))
        tree.accumulate(X, update, learning_rate)
        raw = raw + update[:, 0]
        if loss_trace is not None:
            loss_trace.append(logistic_loss(y, raw))
    return GradBoostModel(init, learning_rate, trees)
