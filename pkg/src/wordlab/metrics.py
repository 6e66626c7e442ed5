"""Example-based and macro-averaged F-scores for word-set predictions.

Per sample, with truth set ``T`` and predicted set ``P``::

    precision = |T & P| / |P|      (0 when P is empty)
    recall    = |T & P| / |T|      (0 when T is empty)
    F         = 2 |T & P| / (|T| + |P|)

and both sets empty counts as a perfect answer (all three equal 1).
Reported aggregates are scaled to 0-100.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class SampleScore:
    precision: float
    recall: float
    f: float


def sample_fscore(truth, pred):
    truth, pred = set(truth), set(pred)
    if not truth and not pred:
        return SampleScore(1.0, 1.0, 1.0)
    hits = len(truth & pred)
    precision = hits / len(pred) if pred else 0.0
    recall = hits / len(truth) if truth else 0.0
    f = 2.0 * hits / (len(truth) + len(pred))
    return SampleScore(precision, recall, f)


@dataclass(frozen=True, eq=False)
class EvalReport:
    sample_f: float
    sample_precision: float
    sample_recall: float
    macro_f: float
    per_word_f: np.ndarray
    word_frequencies: np.ndarray | None = None

    def as_row(self):
        return {
            "sample_f": self.sample_f,
            "sample_precision": self.sample_precision,
            "sample_recall": self.sample_recall,
            "macro_f": self.macro_f,
        }

    def per_word_rows(self):
        freqs = self.word_frequencies
        for j, f in enumerate(self.per_word_f):
            yield {
                "word_id": j,
                "train_count": None if freqs is None else int(freqs[j]),
                "f": None if np.isnan(f) else float(f),
            }


def _as_matrix(labels, m):
    if isinstance(labels, np.ndarray) and labels.ndim == 2:
        return labels.astype(bool)
    if m is None:
        raise ValueError("m is required when labels are given as word-id sets")
    out = np.zeros((len(labels), m), dtype=bool)
    for i, ids in enumerate(labels):
        out[i, list(ids)] = True
    return out


def sample_scores(truths, preds, m=None):
    """Per-row precision, recall and F arrays (fractions, not percent)."""
    T = _as_matrix(truths, m)
    P = _as_matrix(preds, m if m is not None else T.shape[1])
    if T.shape != P.shape:
        raise ShapeError(f"truth shape {T.shape} != prediction shape {P.shape}")
    hits = (T & P).sum(axis=1).astype(float)
    nt, npred = T.sum(axis=1), P.sum(axis=1)
    both_empty = (nt == 0) & (npred == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(npred > 0, hits / np.maximum(npred, 1), 0.0)
        recall = np.where(nt > 0, hits / np.maximum(nt, 1), 0.0)
        f = np.where(nt + npred > 0, 2.0 * hits / np.maximum(nt + npred, 1), 0.0)
    precision[both_empty] = recall[both_empty] = f[both_empty] = 1.0
    return precision, recall, f


def per_word_fscore(truths, preds, m=None):
    """Binary F per word over all rows; NaN for words absent from the truth."""
    T = _as_matrix(truths, m)
    P = _as_matrix(preds, T.shape[1])
    if T.shape != P.shape:
        raise ShapeError(f"truth shape {T.shape} != prediction shape {P.shape}")
    tp = (T & P).sum(axis=0).astype(float)
    fp = (~T & P).sum(axis=0)
    fn = (T & ~P).sum(axis=0)
    present = T.any(axis=0)
    f = np.full(T.shape[1], np.nan)
    f[present] = 2.0 * tp[present] / (2.0 * tp[present] + fp[present] + fn[present])
    return f


def evaluate(truths, preds, train_label_counts=None, m=None):
    """Sample-averaged and macro-averaged scores, both on a 0-100 scale.

    The macro mean runs over words that occur at least once in ``truths``.
    """
    T = _as_matrix(truths, m)
    P = _as_matrix(preds, T.shape[1])
    if T.shape[0] != P.shape[0]:
        raise ShapeError(f"{T.shape[0]} truth rows vs {P.shape[0]} prediction rows")
    precision, recall, f = sample_scores(T, P)
    word_f = per_word_fscore(T, P)
    present = ~np.isnan(word_f)
    macro = float(word_f[present].mean()) if present.any() else 0.0
    counts = None if train_label_counts is None else np.asarray(train_label_counts)
    return EvalReport(
        sample_f=100.0 * float(f.mean()),
        sample_precision=100.0 * float(precision.mean()),
        sample_recall=100.0 * float(recall.mean()),
        macro_f=100.0 * macro,
        per_word_f=100.0 * word_f,
        word_frequencies=counts,
    )
