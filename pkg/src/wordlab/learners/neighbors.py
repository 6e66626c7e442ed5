"""k-nearest neighbors and nearest centroid learners (Euclidean distance)."""
import numpy as np

from ..errors import ParameterError, ShapeError


def squared_distances(A, B, chunk_bytes=64 << 20):
    """Pairwise squared Euclidean distances, shape ``(len(A), len(B))``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"{A.shape[1]} vs {B.shape[1]} features")
    bb = np.einsum("ij,ij->i", B, B)
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, chunk_bytes // (8 * max(1, B.shape[0])))
    for lo in range(0, A.shape[0], step):
        a = A[lo:lo + step]
        d = np.einsum("ij,ij->i", a, a)[:, None] + bb[None, :] - 2.0 * (a @ B.T)
        np.maximum(d, 0.0, out=d)
        out[lo:lo + step] = d
    return out


class KnnModel:
    """Stores every training row; a word is predicted when strictly more than
    half of the ``k`` nearest stored rows carry it."""

    def __init__(self, X, Y, k=5):
        X = np.array(X, dtype=np.float64)
        Y = np.array(Y, dtype=np.int8)
        if X.ndim != 2 or X.shape[0] != Y.shape[0]:
            raise ShapeError("X and Y must have the same number of rows")
        if int(k) != k or k < 1:
            raise ParameterError(f"k must be a positive integer, got {k}")
        self.X, self.Y, self.k = X, Y, int(k)

    def neighbors(self, Q):
        """Indices of the ``k`` nearest stored rows per query; distance ties
        go to the lower stored index."""
        if self.k > self.X.shape[0]:
            raise ParameterError(
                f"k={self.k} exceeds the {self.X.shape[0]} stored rows"
            )
        Q = np.asarray(Q, dtype=np.float64)
        out = np.empty((Q.shape[0], self.k), dtype=np.int64)
        step = 256
        for lo in range(0, Q.shape[0], step):
            d = squared_distances(Q[lo:lo + step], self.X)
            out[lo:lo + step] = np.argsort(d, axis=1, kind="stable")[:, :self.k]
        return out

    def vote_fractions(self, Q):
        idx = self.neighbors(Q)
        return self.Y[idx].sum(axis=1) / self.k

    def predict(self, Q):
        return self.vote_fractions(Q) > 0.5


class CentroidModel:
    """Nearest centroid.

    ``ovr`` form: each word keeps the centroid of its positive rows and of its
    negative rows; the score is ``d(x, negative) - d(x, positive)`` so a word
    is predicted only when ``x`` is strictly closer to its positive centroid.

    ``native`` form: one centroid per word; a row gets the ``r`` words with
    the nearest centroids, where ``r`` is the rounded mean label count seen
    in training.
    """

    def __init__(self, pos, neg=None, r=None):
        self.pos = pos
        self.neg = neg
        self.r = r

    @classmethod
    def fit_ovr(cls, X, Y):
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        npos = Y.sum(axis=0)
        nneg = Y.shape[0] - npos
        if (npos == 0).any() or (nneg == 0).any():
            raise ParameterError("every word needs positive and negative rows")
        sums = Y.T @ X
        pos = sums / npos[:, None]
        neg = (X.sum(axis=0)[None, :] - sums) / nneg[:, None]
        return cls(pos, neg)

    @classmethod
    def fit_native(cls, X, Y):
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        counts = Y.sum(axis=0)
        pos = np.full((Y.shape[1], X.shape[1]), np.nan)
        seen = counts > 0
        pos[seen] = (Y.T @ X)[seen] / counts[seen, None]
        r = int(round(Y.sum(axis=1).mean()))
        return cls(pos, None, max(r, 0))

    def scores(self, X):
        X = np.asarray(X, dtype=np.float64)
        if self.neg is not None:
            d_pos = np.sqrt(squared_distances(X, self.pos))
            d_neg = np.sqrt(squared_distances(X, self.neg))
            return d_neg - d_pos
        seen = ~np.isnan(self.pos[:, 0])
        d = np.full((X.shape[0], self.pos.shape[0]), np.inf)
        d[:, seen] = squared_distances(X, self.pos[seen])
        chosen = np.argsort(d, axis=1, kind="stable")[:, :min(self.r, int(seen.sum()))]
        out = np.zeros_like(d)
        np.put_along_axis(out, chosen, 1.0, axis=1)
        return out
