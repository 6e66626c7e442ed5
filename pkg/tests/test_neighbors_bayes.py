import numpy as np
import pytest
from scipy.stats import norm

from wordlab.errors import ParameterError
from wordlab.learners.bayes import GaussianNB, MultinomialNB
from wordlab.learners.neighbors import CentroidModel, KnnModel, squared_distances
from wordlab.metrics import evaluate


def random_multilabel(rows, n, m, seed, density=0.3):
    rng = np.random.default_rng(seed)
    X = rng.random((rows, n))
    Y = (rng.random((rows, m)) < density).astype(np.int8)
    return X, Y


# ---- KNN ----------------------------------------------------------------------

def test_knn_exact_match():
    X, Y = random_multilabel(20, 3, 5, 0)
    model = KnnModel(X, Y, k=1)
    assert np.array_equal(model.predict(X[7:8])[0], Y[7].astype(bool))


def test_knn_majority_vote():
    X = np.array([[0.0], [0.1], [0.2], [5.0]])
    Y = np.array([[1, 1], [1, 0], [0, 0], [0, 1]])
    # neighbors of 0.05 with k=3: rows 0, 1, 2 -> word A 2/3, word B 1/3
    assert KnnModel(X, Y, k=3).predict(np.array([[0.05]])).tolist() == [[True, False]]


def test_knn_brute_force_oracle():
    X, Y = random_multilabel(30, 4, 6, 1)
    Q = np.random.default_rng(2).random((15, 4))
    X[5] = X[9]  # a distance tie between stored rows
    model = KnnModel(X, Y, k=5)
    got = model.predict(Q)
    for q, row in zip(Q, got):
        d = [(float(((q - x) ** 2).sum()), i) for i, x in enumerate(X)]
        nearest = [i for _, i in sorted(d)[:5]]
        votes = Y[nearest].sum(axis=0)
        assert np.array_equal(row, votes * 2 > 5)


def test_knn_k_too_large():
    X, Y = random_multilabel(3, 2, 2, 3)
    with pytest.raises(ParameterError):
        KnnModel(X, Y, k=4).predict(X)


def test_knn_one_neighbor_memorizes():
    X, Y = random_multilabel(60, 5, 8, 4)
    assert evaluate(Y, KnnModel(X, Y, k=1).predict(X)).sample_f == 100


def test_squared_distances_match_direct():
    A = np.random.default_rng(5).random((7, 3))
    B = np.random.default_rng(6).random((9, 3))
    direct = ((A[:, None, :] - B[None]) ** 2).sum(axis=2)
    assert np.allclose(squared_distances(A, B, chunk_bytes=8), direct, atol=1e-12)


# ---- nearest centroid -------------------------------------------------------

def test_centroid_hand_case():
    X = np.array([[0.8], [1.0], [0.0], [0.2]])
    Y = np.array([[1], [1], [0], [0]])
    model = CentroidModel.fit_ovr(X, Y)
    assert model.scores(np.array([[0.7]]))[0, 0] > 0
    assert model.scores(np.array([[0.9]]))[0, 0] > 0
    # equidistant point: score 0, which the margin threshold treats as negative
    assert model.scores(np.array([[0.5]]))[0, 0] == pytest.approx(0.0, abs=1e-15)


def test_centroids_are_class_means():
    X, Y = random_multilabel(40, 3, 4, 7)
    model = CentroidModel.fit_ovr(X, Y)
    for j in range(4):
        pos = X[Y[:, j] == 1].mean(axis=0)
        neg = X[Y[:, j] == 0].mean(axis=0)
        assert np.abs(model.pos[j] - pos).max() <= 1e-12
        assert np.abs(model.neg[j] - neg).max() <= 1e-12


def test_centroid_native_predicts_r_nearest():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    Y = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    model = CentroidModel.fit_native(X, Y)
    assert model.r == 1
    assert model.scores(np.array([[0.1, 0.9]])).tolist() == [[0, 0, 1]]


# ---- Gaussian naive Bayes ---------------------------------------------------

def test_gnb_symmetric_midpoint():
    X = np.array([[0.0], [0.2], [0.8], [1.0]])
    y = np.array([0, 0, 1, 1])
    assert GaussianNB().fit(X, y).predict_proba(np.array([[0.5]]))[0, 0] == pytest.approx(0.5)


def test_gnb_confident_case():
    # class means 0.8 / 0.2, variances 0.01 each, equal priors
    X = np.array([[0.7], [0.9], [0.1], [0.3]])
    y = np.array([1, 1, 0, 0])
    model = GaussianNB().fit(X, y)
    assert model.var_pos[0, 0] == pytest.approx(0.01)
    assert model.predict_proba(np.array([[0.8]]))[0, 0] > 0.999


def test_gnb_matches_density_oracle():
    rng = np.random.default_rng(8)
    for _ in range(10):
        X = rng.random((25, 2))
        y = (rng.random(25) < 0.4).astype(int)
        y[:2] = [0, 1]
        model = GaussianNB(var_floor=1e-9).fit(X, y)
        q = rng.random(2)
        terms = {}
        for c in (0, 1):
            rows = X[y == c]
            var = rows.var(axis=0) + model.epsilon
            like = np.prod(norm.pdf(q, rows.mean(axis=0), np.sqrt(var)))
            terms[c] = like * len(rows) / len(X)
        expect = terms[1] / (terms[0] + terms[1])
        assert model.predict_proba(q[None])[0, 0] == pytest.approx(expect, abs=1e-9)


def test_gnb_posteriors_sum_to_one():
    X, Y = random_multilabel(50, 4, 5, 9)
    model = GaussianNB().fit(X, Y)
    lp, ln = model.joint_log_likelihood(X)
    pos = np.exp(lp - np.logaddexp(lp, ln))
    neg = np.exp(ln - np.logaddexp(lp, ln))
    assert np.abs(pos + neg - 1).max() <= 1e-12
    P = model.predict_proba(X)
    assert ((P > 0) & (P < 1)).all()


def test_gnb_constant_feature_survives():
    X = np.array([[0.5, 0.1], [0.5, 0.2], [0.5, 0.8], [0.5, 0.9]])
    y = np.array([0, 0, 1, 1])
    model = GaussianNB().fit(X, y)
    assert (model.var_pos > 0).all() and (model.var_neg > 0).all()
    assert np.isfinite(model.predict_proba(X)).all()


# ---- multinomial naive Bayes -----------------------------------------------

def test_mnb_large_alpha_gives_priors():
    X, Y = random_multilabel(30, 3, 2, 10)
    model = MultinomialNB(alpha=1e12).fit(X, Y)
    prior = Y.mean(axis=0)
    assert np.allclose(model.predict_proba(X[:5]), prior, atol=1e-6)


def test_mnb_separated_counts():
    X = np.array([[1.0, 0.0], [0.9, 0.0], [0.0, 1.0], [0.0, 0.8]])
    y = np.array([1, 1, 0, 0])
    model = MultinomialNB(alpha=0.01).fit(X, y)
    assert model.predict_proba(np.array([[1.0, 0.0]]))[0, 0] > 0.5
    assert model.predict_proba(np.array([[0.0, 1.0]]))[0, 0] < 0.5


def test_mnb_brute_force_3x2():
    X = np.array([[2.0, 1.0], [0.0, 3.0], [1.0, 1.0]])
    y = np.array([1, 0, 1])
    alpha = 0.5
    model = MultinomialNB(alpha).fit(X, y)
    theta1 = (X[[0, 2]].sum(axis=0) + alpha) / (X[[0, 2]].sum() + 2 * alpha)
    theta0 = (X[1] + alpha) / (X[1].sum() + 2 * alpha)
    q = np.array([1.0, 2.0])
    l1 = (2 / 3) * np.prod(theta1 ** q)
    l0 = (1 / 3) * np.prod(theta0 ** q)
    assert model.predict_proba(q[None])[0, 0] == pytest.approx(l1 / (l0 + l1), abs=1e-12)
    assert np.exp(model.log_theta_pos).sum() == pytest.approx(1.0, abs=1e-12)


def test_mnb_rejects_negative_features():
    with pytest.raises(ParameterError):
        MultinomialNB().fit(np.array([[-0.1], [0.2]]), np.array([0, 1]))
    model = MultinomialNB().fit(np.array([[0.1], [0.2]]), np.array([0, 1]))
    with pytest.raises(ParameterError):
        model.predict_proba(np.array([[-1.0]]))
