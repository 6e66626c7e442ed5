"""Multi-layer perceptron with ReLU hidden layers and one sigmoid unit per word.

Training minimizes the binary cross-entropy averaged over rows and words
with plain mini-batch gradient descent; step ``t`` uses
``lr / (1 + decay * t)``.
"""
import numpy as np

from ..errors import ParameterError, ShapeError
from ..seeding import make_rng


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def init_params(sizes, seed):
    """He-scaled normal weights and zero biases for layer ``sizes``."""
    rng = make_rng(seed)
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        W = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        params.append((W, np.zeros(fan_out)))
    return params


def forward(params, X):
    """Activations of every layer; the last entry holds the output scores."""
    acts = [X]
    h = X
    for i, (W, b) in enumerate(params):
        z = h @ W + b
        h = _sigmoid(z) if i == len(params) - 1 else np.maximum(z, 0.0)
        acts.append(h)
    return acts


def bce(P, Y):
    """Mean binary cross-entropy over all entries, computed from probabilities."""
    eps = 1e-300
    return float(-np.mean(Y * np.log(P + eps) + (1.0 - Y) * np.log(1.0 - P + eps)))


def loss_and_grads(params, X, Y):
    """Loss and its gradient with respect to every ``(W, b)``."""
    acts = forward(params, X)
    P = acts[-1]
    # the sigmoid/cross-entropy pair has a z-gradient of P - Y
    delta = (P - Y) / Y.size
    grads = [None] * len(params)
    for i in range(len(params) - 1, -1, -1):
        W, _ = params[i]
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        if i:
            delta = (delta @ W.T) * (acts[i] > 0.0)
    return bce(P, Y), grads


class MlpModel:
    def __init__(self, params):
        self.params = [(np.array(W, dtype=np.float64), np.array(b, dtype=np.float64))
                       for W, b in params]

    @property
    def sizes(self):
        return [self.params[0][0].shape[0]] + [W.shape[1] for W, _ in self.params]

    def scores(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.sizes[0]:
            raise ShapeError(f"expected {self.sizes[0]} features, got {np.shape(X)}")
        return forward(self.params, X)[-1]

    predict_proba = scores


def mlp_fit(X, Y, h1=128, h2=128, lr=0.01, batch_size=32, epochs=200, seed=0,
            layers=2, decay=0.001, init=None, loss_trace=None):
    """Train an MLP with ``layers`` hidden ReLU layers (1 or 2).

    ``init`` overrides the seeded initialization with explicit parameters.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0] or X.shape[0] == 0:
        raise ShapeError("X and Y must be nonempty 2-D arrays with matching rows")
    if not np.isin(Y, (0.0, 1.0)).all():
        raise ParameterError("Y must be multi-hot")
    if layers not in (1, 2):
        raise ParameterError("layers must be 1 or 2")
    if batch_size < 1:
        raise ParameterError("batch_size must be >= 1")
    hidden = [h1, h2][:layers]
    sizes = [X.shape[1], *hidden, Y.shape[1]]
    rng = make_rng(seed)
    if init is None:
        params = init_params(sizes, rng.integers(2**63))
    else:
        params = [(np.array(W, dtype=np.float64), np.array(b, dtype=np.float64)) for W, b in init]
        if [params[0][0].shape[0]] + [W.shape[1] for W, _ in params] != sizes:
            raise ShapeError("init parameters do not match the network shape")
    rows = X.shape[0]
    t = 0
    for epoch in range(int(epochs)):
        perm = rng.permutation(rows)
        total = 0.0
        for lo in range(0, rows, batch_size):
            idx = perm[lo:lo + batch_size]
            loss, grads = loss_and_grads(params, X[idx], Y[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, step {t}; lower mlp.lr"
                )
            rate = lr / (1.0 + decay * t)
            params = [(W - rate * gW, b - rate * gb) for (W, b), (gW, gb) in zip(params, grads)]
            total += loss * len(idx)
            t += 1
        if loss_trace is not None:
            loss_trace.append(total / rows)
    return MlpModel(params)
