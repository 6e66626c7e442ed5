"""Naive Bayes learners, one binary (word present / absent) problem per column.

Class-conditional parameters are closed-form maximum likelihood estimates.
With fully observed labels that is exactly the fixed point expectation-
maximization would reach, so no iterative estimation is needed.
"""
import numpy as np

from ..errors import ParameterError, ShapeError

_LOG2PI = np.log(2.0 * np.pi)


def _split_counts(X, Y):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or X.shape[0] != Y.shape[0] or X.shape[0] == 0:
        raise ShapeError("X and Y must be nonempty with matching rows")
    npos = Y.sum(axis=0)
    nneg = Y.shape[0] - npos
    if (npos == 0).any() or (nneg == 0).any():
        raise ParameterError("every column needs both classes present")
    return X, Y, npos, nneg


def _posterior(log_pos, log_neg):
    # P(positive | x) via log-sum-exp normalization
    return np.exp(log_pos - np.logaddexp(log_pos, log_neg))


class GaussianNB:
    """Per word: independent normal features for the positive and the negative
    class. Variances are floored at ``var_floor * max feature variance``."""

    def __init__(self, var_floor=1e-9):
        self.var_floor = var_floor

    def fit(self, X, Y):
        X, Y, npos, nneg = _split_counts(X, Y)
        eps = self.var_floor * float(X.var(axis=0).max())
        # moments about the global mean keep the one-pass variance accurate
        Xc = X - X.mean(axis=0)
        s1, s2 = Y.T @ Xc, Y.T @ (Xc * Xc)
        t1, t2 = Xc.sum(axis=0), (Xc * Xc).sum(axis=0)
        mpos, mneg = s1 / npos[:, None], (t1 - s1) / nneg[:, None]
        self.var_pos = np.maximum(s2 / npos[:, None] - mpos * mpos, 0.0)
        self.var_neg = np.maximum((t2 - s2) / nneg[:, None] - mneg * mneg, 0.0)
        self.mean_pos = mpos + X.mean(axis=0)
        self.mean_neg = mneg + X.mean(axis=0)
        self.var_pos += eps
        self.var_neg += eps
        self.epsilon = eps
        total = Y.shape[0]
        self.log_prior_pos = np.log(npos / total)
        self.log_prior_neg = np.log(nneg / total)
        return self

    @staticmethod
    def _loglik(X, mean, var):
        # sum_i log N(x_i; mean_i, var_i) for every row and every word
        quad = np.empty((X.shape[0], mean.shape[0]))
        for j in range(mean.shape[0]):
            diff = X - mean[j]
            quad[:, j] = (diff * diff / var[j]).sum(axis=1)
        return -0.5 * (quad + np.log(var).sum(axis=1) + X.shape[1] * _LOG2PI)

    def joint_log_likelihood(self, X):
        X = np.asarray(X, dtype=np.float64)
        lp = self._loglik(X, self.mean_pos, self.var_pos) + self.log_prior_pos
        ln = self._loglik(X, self.mean_neg, self.var_neg) + self.log_prior_neg
        return lp, ln

    def predict_proba(self, X):
        return _posterior(*self.joint_log_likelihood(X))


class MultinomialNB:
    """Per word: multinomial feature distribution with additive smoothing
    ``alpha`` for the positive and the negative class. Features act as
    fractional counts and must be nonnegative."""

    def __init__(self, alpha=1.0):
        if not alpha > 0:
            raise ParameterError(f"alpha must be > 0, got {alpha}")
        self.alpha = alpha

    def fit(self, X, Y):
        X, Y, npos, nneg = _split_counts(X, Y)
        if (X < 0).any():
            raise ParameterError("multinomial naive Bayes needs nonnegative features")
        n = X.shape[1]
        fpos = Y.T @ X
        fneg = X.sum(axis=0)[None, :] - fpos
        fneg = np.maximum(fneg, 0.0)
        self.log_theta_pos = np.log(fpos + self.alpha) - np.log(
            fpos.sum(axis=1, keepdims=True) + self.alpha * n)
        self.log_theta_neg = np.log(fneg + self.alpha) - np.log(
            fneg.sum(axis=1, keepdims=True) + self.alpha * n)
        total = Y.shape[0]
        self.log_prior_pos = np.log(npos / total)
        self.log_prior_neg = np.log(nneg / total)
        return self

    def joint_log_likelihood(self, X):
        X = np.asarray(X, dtype=np.float64)
        if (X < 0).any():
            raise ParameterError("multinomial naive Bayes needs nonnegative features")
        lp = X @ self.log_theta_pos.T + self.log_prior_pos
        ln = X @ self.log_theta_neg.T + self.log_prior_neg
        return lp, ln

    def predict_proba(self, X):
        return _posterior(*self.joint_log_likelihood(X))
