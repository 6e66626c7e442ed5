import numpy as np
import pytest

from wordlab.errors import ParameterError, ShapeError
from wordlab.learners.mlp import (
    MlpModel,
    bce,
    forward,
    init_params,
    loss_and_grads,
    mlp_fit,
)
from wordlab.metrics import evaluate


def zero_params(sizes):
    return [(np.zeros((a, b)), np.zeros(b)) for a, b in zip(sizes[:-1], sizes[1:])]


def test_zero_weights_give_half():
    model = MlpModel(zero_params([3, 4, 4, 2]))
    P = model.predict_proba(np.random.default_rng(0).random((5, 3)))
    assert np.array_equal(P, np.full((5, 2), 0.5))
    assert not (P > 0.5).any()


def test_hand_forward_pass():
    W1 = np.array([[1.0, -1.0], [0.5, 2.0]])
    b1 = np.array([0.0, 0.5])
    W2 = np.array([[1.0, 0.0], [-1.0, 1.0]])
    b2 = np.array([0.1, -0.1])
    W3 = np.array([[2.0], [-3.0]])
    b3 = np.array([0.25])
    x = np.array([[0.4, 0.2]])
    # layer 1: z = [0.5, 0.5] -> relu [0.5, 0.5]
    # layer 2: z = [0.1, 0.4] -> relu [0.1, 0.4]
    # output: z = 0.2 - 1.2 + 0.25 = -0.75
    expect = 1.0 / (1.0 + np.exp(0.75))
    out = forward([(W1, b1), (W2, b2), (W3, b3)], x)[-1]
    assert abs(out[0, 0] - expect) <= 1e-12


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    params = init_params([3, 2, 2, 2], 2)
    params = [(W + 0.1 * rng.normal(size=W.shape), b + 0.1 * rng.normal(size=b.shape))
              for W, b in params]
    X = rng.random((6, 3))
    Y = (rng.random((6, 2)) < 0.5).astype(float)
    _, grads = loss_and_grads(params, X, Y)
    h = 1e-5
    for layer, (W, b) in enumerate(params):
        for arr, g in ((W, grads[layer][0]), (b, grads[layer][1])):
            for idx in np.ndindex(*arr.shape):
                old = arr[idx]
                arr[idx] = old + h
                up = bce(forward(params, X)[-1], Y)
                arr[idx] = old - h
                down = bce(forward(params, X)[-1], Y)
                arr[idx] = old
                num = (up - down) / (2 * h)
                assert abs(g[idx] - num) <= 1e-4 * max(abs(num), 1e-3)


def test_two_blobs_learned():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(0.2, 0.05, (10, 2)), rng.normal(0.8, 0.05, (10, 2))])
    Y = np.zeros((20, 2))
    Y[:10, 0] = 1
    Y[10:, 1] = 1
    model = mlp_fit(X, Y, h1=16, h2=16, lr=1.0, batch_size=4, epochs=500, seed=4, decay=0.0)
    assert evaluate(Y, model.predict_proba(X) > 0.5).sample_f == 100


def test_outputs_in_open_interval_and_rowwise():
    model = MlpModel(init_params([4, 8, 8, 3], 5))
    X = np.random.default_rng(6).random((10, 4))
    X[7] = X[2]
    P = model.predict_proba(X)
    assert ((P > 0) & (P < 1)).all()
    assert np.array_equal(P[7], P[2])


def test_small_step_reduces_loss():
    rng = np.random.default_rng(7)
    X = rng.random((30, 4))
    Y = (rng.random((30, 3)) < 0.3).astype(float)
    params = init_params([4, 8, 8, 3], 8)
    loss, grads = loss_and_grads(params, X, Y)
    stepped = [(W - 1e-4 * gW, b - 1e-4 * gb) for (W, b), (gW, gb) in zip(params, grads)]
    assert loss_and_grads(stepped, X, Y)[0] < loss


def test_output_column_permutation():
    rng = np.random.default_rng(9)
    X = rng.random((25, 3))
    Y = (rng.random((25, 4)) < 0.4).astype(float)
    init = init_params([3, 5, 5, 4], 10)
    perm = np.array([2, 0, 3, 1])
    permuted = init[:-1] + [(init[-1][0][:, perm], init[-1][1][perm])]
    a = mlp_fit(X, Y, h1=5, h2=5, lr=0.5, epochs=20, seed=11, init=init)
    b = mlp_fit(X, Y[:, perm], h1=5, h2=5, lr=0.5, epochs=20, seed=11, init=permuted)
    assert np.allclose(a.predict_proba(X)[:, perm], b.predict_proba(X), atol=1e-12)


def test_training_loss_decreases_overall():
    rng = np.random.default_rng(12)
    X = rng.random((80, 4))
    Y = (X[:, :2] > 0.5).astype(float)
    trace = []
    mlp_fit(X, Y, h1=16, h2=16, lr=0.5, epochs=60, seed=13, loss_trace=trace)
    assert len(trace) == 60 and trace[-1] < trace[0]


def test_single_hidden_layer_and_determinism():
    X = np.random.default_rng(14).random((20, 3))
    Y = (X[:, :1] > 0.5).astype(float)
    a = mlp_fit(X, Y, h1=6, layers=1, epochs=5, seed=15)
    b = mlp_fit(X, Y, h1=6, layers=1, epochs=5, seed=15)
    assert a.sizes == [3, 6, 1]
    assert np.array_equal(a.predict_proba(X), b.predict_proba(X))


def test_validation():
    X = np.zeros((4, 2))
    with pytest.raises(ParameterError):
        mlp_fit(X, np.full((4, 1), 0.5))
    with pytest.raises(ParameterError):
        mlp_fit(X, np.zeros((4, 1)), layers=3)
    with pytest.raises(ShapeError):
        mlp_fit(X, np.zeros((3, 1)))
    with pytest.raises(ShapeError):
        mlp_fit(X, np.zeros((4, 1)), init=zero_params([3, 4, 4, 1]))
    with pytest.raises(ShapeError):
        MlpModel(zero_params([2, 3, 1])).scores(np.zeros((1, 5)))

