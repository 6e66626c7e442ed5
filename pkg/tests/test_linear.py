import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wordlab.errors import ParameterError
from wordlab.learners.linear import (
    LinearModel,
    add_bias,
    logistic_gradient,
    logistic_objective,
    logreg_fit,
    pa_fit,
    pa_update,
    sgd_fit,
)


def blobs(rows=200, seed=0, gap=1.0):
    rng = np.random.default_rng(seed)
    y = (np.arange(rows) % 2).astype(float)
    X = rng.normal(size=(rows, 2)) + gap * (2 * y[:, None] - 1)
    return X, y


def test_separable_1d():
    X = np.array([[0.0], [0.1], [0.2], [0.8], [0.9], [1.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    model = logreg_fit(X, y, l2=1e-6, epochs=2000, lr=5.0, decay=0.0)
    assert np.array_equal(model.predict_proba(X)[:, 0] > 0.5, y == 1)


def test_logistic_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    Xd = add_bias(rng.normal(size=(15, 4)))
    Y = (rng.random((15, 3)) < 0.5).astype(float)
    W = rng.normal(size=(5, 3))
    l2, h = 0.3, 1e-6
    G = logistic_gradient(W, Xd, Y, l2)
    num = np.zeros_like(W)
    for idx in np.ndindex(*W.shape):
        up, down = W.copy(), W.copy()
        up[idx] += h
        down[idx] -= h
        col = idx[1]
        num[idx] = (logistic_objective(up, Xd, Y, l2)[col]
                    - logistic_objective(down, Xd, Y, l2)[col]) / (2 * h)
    rel = np.abs(G - num).max() / np.abs(num).max()
    assert rel < 1e-5


def test_full_batch_loss_decreases():
    X, y = blobs()
    Xd = add_bias(X)
    Y = y[:, None]
    W = np.zeros((3, 1))
    prev = logistic_objective(W, Xd, Y, 1e-3)[0]
    for _ in range(50):
        W = W - 0.1 * logistic_gradient(W, Xd, Y, 1e-3)
        cur = logistic_objective(W, Xd, Y, 1e-3)[0]
        assert cur < prev
        prev = cur


def test_logreg_stops_at_tolerance():
    X, y = blobs(gap=0.5)
    model = logreg_fit(X, y, l2=1e-2, epochs=100000, lr=1.0, tol=1e-6, decay=0.0)
    Xd = add_bias(X)
    assert model.t < 100000
    assert np.linalg.norm(logistic_gradient(model.W, Xd, y[:, None], 1e-2)) <= 1e-6 * 1.5


def test_non_binary_labels_rejected():
    with pytest.raises(ParameterError):
        logreg_fit(np.zeros((3, 1)), np.array([0, 1, 2]))
    with pytest.raises(ParameterError):
        sgd_fit(np.zeros((3, 1)), np.array([0.5, 1, 0]))


def test_sgd_single_sample_step():
    x = np.array([[0.5, -1.0]])
    y = np.array([1])
    lr, l2 = 0.3, 0.1
    model = sgd_fit(x, y, loss="log", l2=l2, epochs=1, lr=lr, seed=0)
    # from w = 0: gradient = (sigmoid(0) - 1) * [x, 1]; the L2 term vanishes at 0
    expect = -lr * (0.5 - 1.0) * np.array([0.5, -1.0, 1.0])
    assert np.allclose(model.W[:, 0], expect, atol=1e-15)


def test_sgd_zero_rate_keeps_init():
    X, y = blobs(40)
    assert (sgd_fit(X, y, lr=0.0, epochs=3).W == 0).all()


def test_sgd_close_to_batch_optimum():
    X, y = blobs(300, seed=2, gap=0.7)
    l2 = 1e-3
    Xd, Y = add_bias(X), y[:, None]
    batch = logreg_fit(X, y, l2=l2, epochs=5000, lr=1.0, tol=1e-10, decay=0.0)
    sgd = sgd_fit(X, y, loss="log", l2=l2, epochs=40, lr=0.05, seed=3, decay=0.1)
    best = logistic_objective(batch.W, Xd, Y, l2)[0]
    got = logistic_objective(sgd.W, Xd, Y, l2)[0]
    assert got <= 1.05 * best


def test_sgd_reproducible_and_continuable():
    X, y = blobs(60)
    a = sgd_fit(X, y, epochs=3, seed=4)
    b = sgd_fit(X, y, epochs=3, seed=4)
    assert np.array_equal(a.W, b.W)
    t = a.t
    sgd_fit(X[:10], y[:10], epochs=2, seed=5, model=a)
    assert a.t == t + 2 and not np.array_equal(a.W, b.W)


def test_pa_passive_when_margin_met():
    w = np.array([2.0, 0.0])
    assert np.array_equal(pa_update(w, np.array([1.0, 0.0]), 1, 1.0), w)


def test_pa_hand_example():
    w = pa_update(np.zeros(2), np.array([1.0, 0.0]), 1, math.inf)
    assert np.array_equal(w, [1.0, 0.0])
    model = pa_fit(np.array([[1.0, 0.0]]), np.array([1]), C=1e9, epochs=1, fit_intercept=False)
    assert np.array_equal(model.W[:, 0], [1.0, 0.0])


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    st.sampled_from([-1, 1]),
    st.floats(0.01, 100.0),
)
def test_pa_update_properties(w, x, y, C):
    w, x = np.array(w), np.array(x)
    before = max(0.0, 1 - y * w @ x)
    new = pa_update(w, x, y, C)
    after = max(0.0, 1 - y * new @ x)
    assert after <= before + 1e-12
    sq = x @ x
    if sq > 1e-6 and before > 0 and before / sq <= C:
        assert after == pytest.approx(0.0, abs=1e-9)


def test_pa_skips_zero_norm_rows():
    X = np.zeros((2, 2))
    model = pa_fit(X, np.array([1, 0]), fit_intercept=False)
    assert (model.W == 0).all()


def test_linear_scores_kind():
    model = LinearModel(np.array([[1.0], [0.0]]), "hinge")
    assert model.scores(np.array([[-2.0]]))[0, 0] == -2.0
    model.loss = "log"
    assert 0 < model.scores(np.array([[-2.0]]))[0, 0] < 0.5
