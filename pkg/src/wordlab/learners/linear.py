"""Linear learners: logistic regression, SGD and online Passive-Aggressive.

All three treat the columns of a 0/1 label matrix as independent binary
problems and solve them side by side; a single column is the plain binary
case. The bias is an always-1 feature appended as the last input, so
weight matrices have ``n + 1`` rows. The bias is not regularized.
"""
import numpy as np

from ..errors import ParameterError, ShapeError
from ..seeding import make_rng


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def add_bias(X):
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _check_binary(X, Y):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ShapeError("X and Y must have the same number of rows")
    if X.shape[0] == 0:
        raise ShapeError("empty training set")
    if not np.isin(Y, (0, 1)).all():
        raise ParameterError("labels must be 0/1")
    return X, Y.astype(np.float64)


class LinearModel:
    """Weights ``W`` of shape ``(n + 1, q)`` (or ``(n, q)`` without bias)."""

    def __init__(self, W, loss, fit_intercept=True, l2=0.0):
        self.W = W
        self.loss = loss
        self.fit_intercept = fit_intercept
        self.l2 = l2
        self.t = 0

    def _design(self, X):
        X = np.asarray(X, dtype=np.float64)
        expected = self.W.shape[0] - int(self.fit_intercept)
        if X.ndim != 2 or X.shape[1] != expected:
            raise ShapeError(f"expected {expected} features, got {np.shape(X)}")
        return add_bias(X) if self.fit_intercept else X

    def decision_function(self, X):
        return self._design(X) @ self.W

    def predict_proba(self, X):
        return _sigmoid(self.decision_function(X))

    def scores(self, X):
        if self.loss == "log":
            return self.predict_proba(X)
        return self.decision_function(X)


def _reg_mask(W, fit_intercept):
    mask = np.ones_like(W)
    if fit_intercept:
        mask[-1] = 0.0
    return mask


def logistic_objective(W, Xd, Y, l2, fit_intercept=True):
    """Mean negative log-likelihood per column plus ``l2/2 * ||w||^2``."""
    Z = Xd @ W
    nll = np.mean(np.logaddexp(0.0, Z) - Y * Z, axis=0)
    reg = 0.5 * l2 * ((W * _reg_mask(W, fit_intercept)) ** 2).sum(axis=0)
    return nll + reg


def logistic_gradient(W, Xd, Y, l2, fit_intercept=True):
    R = _sigmoid(Xd @ W) - Y
    return Xd.T @ R / Xd.shape[0] + l2 * W * _reg_mask(W, fit_intercept)


def logreg_fit(X, Y, l2=1e-4, epochs=100, lr=0.1, tol=1e-6, decay=0.01,
               fit_intercept=True):
    """L2-regularized logistic regression by full-batch gradient descent.

    Step ``t`` uses ``lr / (1 + decay * t)``. A column stops updating once
    its gradient norm drops to ``tol``.
    """
    X, Y = _check_binary(X, Y)
    Xd = add_bias(X) if fit_intercept else X
    W = np.zeros((Xd.shape[1], Y.shape[1]))
    active = np.ones(Y.shape[1], dtype=bool)
    for t in range(int(epochs)):
        G = logistic_gradient(W, Xd, Y, l2, fit_intercept)
        active &= np.linalg.norm(G, axis=0) > tol
        if not active.any():
            break
        W[:, active] -= lr / (1.0 + decay * t) * G[:, active]
    if not np.isfinite(W).all():
        raise FloatingPointError("logistic regression diverged; lower lin.lr")
    model = LinearModel(W, "log", fit_intercept, l2)
    model.t = t + 1 if epochs else 0
    return model


def _sample_grad(loss, x, y, w_scores):
    """Per-sample loss gradient factor: returns g with grad = g[None, :] * x[:, None]."""
    if loss == "log":
        return _sigmoid(w_scores) - y
    s = 2.0 * y - 1.0
    return np.where(s * w_scores < 1.0, -s, 0.0)


def sgd_fit(X, Y, loss="log", l2=1e-4, epochs=20, lr=0.1, seed=0, decay=0.01,
            fit_intercept=True, model=None):
    """Per-sample stochastic gradient descent over shuffled epochs.

    Epoch ``t`` uses the rate ``lr / (1 + decay * t)``. The shuffle order is
    shared by all columns. Passing ``model`` continues training it on the
    new rows (the epoch counter carries over).
    """
    if loss not in ("log", "hinge"):
        raise ParameterError(f"unknown SGD loss {loss!r}")
    X, Y = _check_binary(X, Y)
    Xd = add_bias(X) if fit_intercept else X
    if model is None:
        model = LinearModel(np.zeros((Xd.shape[1], Y.shape[1])), loss, fit_intercept, l2)
    W = model.W
    if W.shape != (Xd.shape[1], Y.shape[1]):
        raise ShapeError("continued model does not match the data shape")
    mask = _reg_mask(W, fit_intercept)
    rng = make_rng(seed)
    for _ in range(int(epochs)):
        rate = lr / (1.0 + decay * model.t)
        for i in rng.permutation(Xd.shape[0]):
            x = Xd[i]
            g = _sample_grad(loss, x, Y[i], x @ W)
            W -= rate * (np.outer(x, g) + l2 * W * mask)
        model.t += 1
    if not np.isfinite(W).all():
        raise FloatingPointError("SGD diverged; lower lin.lr")
    return model


def pa_update(w, x, y, C):
    """One PA-I step for a single binary problem with ``y`` in {-1, +1}.

    Returns the new weight vector; a zero-norm input is skipped.
    """
    loss = max(0.0, 1.0 - y * float(w @ x))
    sq = float(x @ x)
    if loss == 0.0 or sq == 0.0:
        return w.copy()
    tau = min(C, loss / sq)
    return w + tau * y * x


def pa_fit(X, Y, C=1.0, epochs=5, seed=0, fit_intercept=True, model=None):
    """Online Passive-Aggressive (PA-I, hinge loss) over shuffled epochs.

    Labels are 0/1 and mapped to -1/+1 internally. Per sample and column:
    ``tau = min(C, hinge / ||x||^2)`` and ``w += tau * y * x``.
    """
    if not C > 0:
        raise ParameterError(f"PA aggressiveness C must be > 0, got {C}")
    X, Y = _check_binary(X, Y)
    Xd = add_bias(X) if fit_intercept else X
    S = 2.0 * Y - 1.0
    if model is None:
        model = LinearModel(np.zeros((Xd.shape[1], Y.shape[1])), "hinge", fit_intercept)
    W = model.W
    if W.shape != (Xd.shape[1], Y.shape[1]):
        raise ShapeError("continued model does not match the data shape")
    sq_norms = np.einsum("ij,ij->i", Xd, Xd)
    rng = make_rng(seed)
    for _ in range(int(epochs)):
        for i in rng.permutation(Xd.shape[0]):
            if sq_norms[i] == 0.0:
                continue
            x, s = Xd[i], S[i]
            loss = np.maximum(0.0, 1.0 - s * (x @ W))
            tau = np.minimum(C, loss / sq_norms[i])
            W += np.outer(x, tau * s)
        model.t += 1
    return model
