"""Uniform learner contract.

``fit(spec, X, Y)`` returns a :class:`TrainedModel` whose ``predict_scores``
gives one score per word and whose ``predict_labels`` thresholds them:
probabilities and vote fractions at ``> 0.5``, margins at ``> 0``.

Words that are constant in the training labels are never handed to a
learner. A word with no positive example is never predicted; a word present
in every training row is always predicted.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ..data import minmax_scale, standardize
from ..errors import ParameterError, ShapeError
from ..seeding import check_seed, derive_seed
from . import bayes, linear, mlp, neighbors, trees

FAMILIES = (
    "KNN",
    "NearestCentroid",
    "LogisticRegression",
    "SGD",
    "PassiveAggressive",
    "GaussianNB",
    "MultinomialNB",
    "DecisionTree",
    "RandomForest",
    "ExtraTrees",
    "AdaBoost",
    "GradientBoosting",
    "MLP",
)

_TREE = {"tree.max_depth": None, "tree.min_leaf": 1}
_FOREST = {"forest.trees": 100, "forest.max_features": "sqrt", **_TREE}

DEFAULT_PARAMS = {
    "KNN": {"knn.k": 5},
    "NearestCentroid": {},
    "LogisticRegression": {"lin.lr": 0.1, "lin.l2": 1e-4, "lin.epochs": 100,
                           "lin.tol": 1e-6, "lin.decay": 0.01},
    "SGD": {"lin.lr": 0.1, "lin.l2": 1e-4, "lin.epochs": 20, "lin.loss": "log",
            "lin.decay": 0.01},
    "PassiveAggressive": {"pa.C": 1.0, "pa.epochs": 5},
    "GaussianNB": {"nb.var_floor": 1e-9},
    "MultinomialNB": {"nb.alpha": 1.0},
    "DecisionTree": {**_TREE, "tree.max_features": None},
    "RandomForest": dict(_FOREST),
    "ExtraTrees": dict(_FOREST),
    "AdaBoost": {"ada.stages": 100, "ada.depth": 1},
    "GradientBoosting": {"gb.stages": 100, "gb.lr": 0.1, "gb.depth": 3},
    "MLP": {"mlp.h1": 128, "mlp.h2": 128, "mlp.lr": 0.01, "mlp.batch": 32,
            "mlp.epochs": 200, "mlp.layers": 2, "mlp.decay": 0.001},
}

DEFAULT_PREPROCESSING = {
    family: ("standardize" if family in ("LogisticRegression", "SGD", "PassiveAggressive", "MLP")
             else "minmax")
    for family in FAMILIES
}

NATIVE_CAPABLE = ("KNN", "NearestCentroid", "DecisionTree", "RandomForest", "ExtraTrees", "MLP")
DEFAULT_MODE = {
    family: ("native" if family in ("KNN", "DecisionTree", "RandomForest", "ExtraTrees", "MLP")
             else "one_vs_rest")
    for family in FAMILIES
}
INCREMENTAL = ("SGD", "PassiveAggressive")

# words still to be learned carry -1; constant words their fixed decision
_LEARNED = -1


@dataclass(frozen=True)
class LearnerSpec:
    family: str
    hyperparams: dict = field(default_factory=dict)
    preprocessing: str | None = None
    multilabel_mode: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown learner family {self.family!r}")
        allowed = DEFAULT_PARAMS[self.family]
        unknown = sorted(set(self.hyperparams) - set(allowed))
        if unknown:
            raise ParameterError(
                f"{self.family} does not take {', '.join(unknown)}; "
                f"known keys: {', '.join(sorted(allowed)) or 'none'}"
            )
        pre = self.preprocessing or DEFAULT_PREPROCESSING[self.family]
        if pre not in ("minmax", "standardize"):
            raise ParameterError(f"unknown preprocessing {pre!r}")
        mode = self.multilabel_mode or DEFAULT_MODE[self.family]
        if mode not in ("native", "one_vs_rest"):
            raise ParameterError(f"unknown multilabel mode {mode!r}")
        if mode == "native" and self.family not in NATIVE_CAPABLE:
            raise ParameterError(f"{self.family} has no native multi-label mode")
        object.__setattr__(self, "preprocessing", pre)
        object.__setattr__(self, "multilabel_mode", mode)
        object.__setattr__(self, "seed", check_seed(self.seed))
        object.__setattr__(self, "hyperparams", dict(self.hyperparams))

    @property
    def params(self):
        return {**DEFAULT_PARAMS[self.family], **self.hyperparams}

    @property
    def name(self):
        if self.multilabel_mode == "one_vs_rest" and self.family in NATIVE_CAPABLE:
            return f"{self.family}OvR"
        return self.family

    def replace(self, **changes):
        fields = {
            "family": self.family,
            "hyperparams": self.hyperparams,
            "preprocessing": self.preprocessing,
            "multilabel_mode": self.multilabel_mode,
            "seed": self.seed,
        }
        fields.update(changes)
        return LearnerSpec(**fields)

    def score_kind(self):
        fam, mode, p = self.family, self.multilabel_mode, self.params
        if fam == "KNN" or (fam == "NearestCentroid" and mode == "native"):
            return "vote"
        if fam in ("NearestCentroid", "PassiveAggressive", "AdaBoost"):
            return "margin"
        if fam == "SGD" and p["lin.loss"] == "hinge":
            return "margin"
        return "probability"


def threshold(scores, score_kind):
    """Boolean word decisions from a score matrix."""
    if score_kind == "margin":
        return scores > 0.0
    return scores > 0.5


class _Preprocessor:
    def __init__(self, kind, X):
        self.kind = kind
        if kind == "minmax":
            _, self.stats = minmax_scale(X)
        else:
            _, self.stats = standardize(X)

    def __call__(self, X):
        if self.kind == "minmax":
            return np.clip(minmax_scale(X, self.stats)[0], 0.0, 1.0)
        return standardize(X, self.stats)[0]


class OvRModel:
    """One independent binary model per word column."""

    def __init__(self, models, forced, fill):
        self.models = models
        self.forced = forced
        self.fill = fill

    def scores(self, X):
        out = np.empty((X.shape[0], len(self.models)))
        for j, model in enumerate(self.models):
            if model is None:
                out[:, j] = self.fill[self.forced[j]]
            else:
                out[:, j] = np.asarray(_score(model, X)).reshape(X.shape[0])
        return out


def _score(model, X):
    return model(X) if callable(model) else model.scores(X)


def _fill_values(score_kind):
    return {0: -1.0, 1: 1.0} if score_kind == "margin" else {0: 0.0, 1: 1.0}


def ovr_wrap(binary_trainer, X, Y, seed=0, word_ids=None, score_kind="probability"):
    """Train ``binary_trainer(X, y, seed)`` once per column of ``Y``.

    Column ``j`` gets the substream ``derive_seed(seed, "word", word_ids[j])``.
    Constant columns are not trained and score as fixed decisions. The
    trainer must return a callable or an object with ``scores(X)``.
    """
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    word_ids = list(range(Y.shape[1])) if word_ids is None else list(word_ids)
    models, forced = [], []
    for j, word in enumerate(word_ids):
        y = Y[:, j]
        if y.min() == y.max():
            models.append(None)
            forced.append(int(y[0]))
            continue
        try:
            models.append(binary_trainer(X, y, derive_seed(seed, "word", word)))
        except Exception as exc:
            raise type(exc)(f"word {word}: {exc}") from exc
        forced.append(_LEARNED)
    return OvRModel(models, forced, _fill_values(score_kind))


def _max_features(value, n):
    if value is None:
        return None
    if value == "sqrt":
        return trees.default_max_features(n)
    if isinstance(value, float) and 0 < value <= 1:
        return max(1, math.ceil(value * n))
    return min(int(value), n)


def _binary_trainer(spec):
    """Per-column trainer used when a family runs one-vs-rest."""
    fam, p = spec.family, spec.params
    if fam == "AdaBoost":
        def train(X, y, seed):
            return trees.fit_adaboost(X, y, p["ada.stages"], p["ada.depth"], seed).decision_function
    elif fam == "GradientBoosting":
        def train(X, y, seed):
            return trees.fit_gradboost(X, y, p["gb.stages"], p["gb.lr"], p["gb.depth"], seed).predict_proba
    else:
        def train(X, y, seed):
            scorer = _fit_native(spec, X, y[:, None], seed)
            return lambda Q: _score(scorer, Q)[:, 0]
    return train


def _fit_native(spec, X, Y, seed):
    fam, p = spec.family, spec.params
    if fam == "KNN":
        return neighbors.KnnModel(X, Y, p["knn.k"]).vote_fractions
    if fam == "NearestCentroid":
        return neighbors.CentroidModel.fit_native(X, Y).scores
    if fam in ("DecisionTree", "RandomForest", "ExtraTrees"):
        mf = _max_features(p.get("forest.max_features", p.get("tree.max_features")), X.shape[1])
        if fam == "DecisionTree":
            tree = trees.fit_tree(X, Y, "gini", p["tree.max_depth"], p["tree.min_leaf"], mf,
                                  "best", None, seed)
            return tree.predict
        forest = trees.fit_forest(
            X, Y, p["forest.trees"], bootstrap=(fam == "RandomForest"), max_features=mf,
            splitter="best" if fam == "RandomForest" else "random",
            max_depth=p["tree.max_depth"], min_samples_leaf=p["tree.min_leaf"], seed=seed)
        return forest.predict_proba
    if fam == "MLP":
        return mlp.mlp_fit(X, Y, p["mlp.h1"], p["mlp.h2"], p["mlp.lr"], p["mlp.batch"],
                           p["mlp.epochs"], seed, p["mlp.layers"], p["mlp.decay"])
    raise ParameterError(f"{fam} has no native multi-label mode")


def _fit_columns(spec, X, Y, seed, model=None):
    """Families whose one-vs-rest fit is vectorized across columns."""
    fam, p = spec.family, spec.params
    if fam == "LogisticRegression":
        return linear.logreg_fit(X, Y, p["lin.l2"], p["lin.epochs"], p["lin.lr"],
                                 p["lin.tol"], p["lin.decay"])
    if fam == "SGD":
        return linear.sgd_fit(X, Y, p["lin.loss"], p["lin.l2"], p["lin.epochs"], p["lin.lr"],
                              derive_seed(seed, "shuffle"), p["lin.decay"], model=model)
    if fam == "PassiveAggressive":
        return linear.pa_fit(X, Y, p["pa.C"], p["pa.epochs"], derive_seed(seed, "shuffle"),
                             model=model)
    if fam == "GaussianNB":
        return bayes.GaussianNB(p["nb.var_floor"]).fit(X, Y).predict_proba
    if fam == "MultinomialNB":
        return bayes.MultinomialNB(p["nb.alpha"]).fit(X, Y).predict_proba
    if fam == "NearestCentroid":
        return neighbors.CentroidModel.fit_ovr(X, Y).scores
    return None


VECTORIZED_OVR = ("LogisticRegression", "SGD", "PassiveAggressive", "GaussianNB",
                  "MultinomialNB", "NearestCentroid")


class TrainedModel:
    def __init__(self, spec, n, m, preprocess, estimator, forced, counts, incremental=False):
        self.spec = spec
        self.n = n
        self.m = m
        self.score_kind = spec.score_kind()
        self._pre = preprocess
        self._est = estimator
        self.forced = forced
        self.train_counts = counts
        self.train_rows = 0
        self.incremental = incremental

    @property
    def learned_columns(self):
        return np.flatnonzero(self.forced == _LEARNED)

    def _check(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise ShapeError(f"model expects {self.n} features, got shape {np.shape(X)}")
        return X

    def predict_scores(self, X):
        X = self._check(X)
        fill = _fill_values(self.score_kind)
        out = np.empty((X.shape[0], self.m))
        for value in (0, 1):
            out[:, self.forced == value] = fill[value]
        cols = self.learned_columns
        if len(cols):
            raw = np.asarray(_score(self._est, self._pre(X)))
            out[:, cols] = raw[:, cols] if self.incremental else raw
        return out

    def predict_labels(self, X):
        return threshold(self.predict_scores(X), self.score_kind)

    def predict_sets(self, X):
        return [tuple(int(j) for j in np.flatnonzero(row)) for row in self.predict_labels(X)]

    def partial_fit(self, X, Y):
        """Continue an incremental (SGD / PassiveAggressive) model on new rows."""
        if not self.incremental:
            raise ParameterError(f"{self.spec.name} does not learn incrementally")
        X = self._check(X)
        Y = _check_labels(X, Y, self.m)
        self.train_counts = self.train_counts + Y.sum(axis=0)
        self.train_rows += X.shape[0]
        self.forced = _forced_from_counts(self.train_counts, self.train_rows)
        seed = derive_seed(self.spec.seed, "partial", self.train_rows)
        _fit_columns(self.spec, self._pre(X), Y, seed, model=self._est)
        return self


def _check_labels(X, Y, m=None):
    Y = np.asarray(Y)
    if Y.ndim != 2 or Y.shape[0] != X.shape[0]:
        raise ShapeError(f"Y must have shape ({X.shape[0]}, m), got {Y.shape}")
    if m is not None and Y.shape[1] != m:
        raise ShapeError(f"Y must have {m} columns, got {Y.shape[1]}")
    if not np.isin(Y, (0, 1)).all():
        raise ParameterError("Y must be a 0/1 matrix")
    return Y.astype(np.int8)


def _forced_from_counts(counts, rows):
    forced = np.full(len(counts), _LEARNED, dtype=np.int8)
    forced[counts == 0] = 0
    forced[counts == rows] = 1
    return forced


def fit(spec, X, Y, incremental=False):
    """Fit ``spec`` on objects ``X`` and multi-hot labels ``Y``.

    With ``incremental`` (SGD and PassiveAggressive only) every column is
    kept in the underlying linear model so later :meth:`TrainedModel.partial_fit`
    calls can extend it.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError("X must be a nonempty 2-D array")
    Y = _check_labels(X, Y)
    if incremental and spec.family not in INCREMENTAL:
        raise ParameterError(f"{spec.name} does not learn incrementally")
    pre = _Preprocessor(spec.preprocessing, X)
    Xp = pre(X)
    counts = Y.sum(axis=0).astype(np.int64)
    forced = _forced_from_counts(counts, X.shape[0])
    cols = np.flatnonzero(forced == _LEARNED)
    estimator = None
    if incremental:
        estimator = _fit_columns(spec, Xp, Y, spec.seed)
    elif len(cols):
        Ysub = Y[:, cols]
        if spec.multilabel_mode == "native":
            estimator = _fit_native(spec, Xp, Ysub, spec.seed)
        elif spec.family in VECTORIZED_OVR:
            estimator = _fit_columns(spec, Xp, Ysub, spec.seed)
        else:
            estimator = ovr_wrap(_binary_trainer(spec), Xp, Ysub, spec.seed,
                                 word_ids=cols, score_kind=spec.score_kind())
    model = TrainedModel(spec, X.shape[1], Y.shape[1], pre, estimator, forced, counts, incremental)
    model.train_rows = X.shape[0]
    return model
