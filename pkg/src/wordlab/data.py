"""Object matrices, tutor labeling, scaling and fold splits.

File formats
------------
Features CSV
    UTF-8, header ``f0,f1,...,f{n-1}``, one object per line, decimal floats.
Labels CSV
    UTF-8, header ``word_ids``, one line per object (row-aligned with the
    features file) holding the uttered word ids separated by spaces. An empty
    field is an empty word set.
Metadata sidecar
    ``<features>.meta.json`` with source tag, shape, scaler statistics and
    seeds.
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ParameterError, ShapeError
from .seeding import RNG_ALGORITHM, check_seed, make_rng
from .tutor import describe_many

SOURCE_TAGS = (
    "SIM",
    "SIM-DEVELOP",
    "GRO1",
    "GRO2-tutor",
    "GRO2-learner",
    "CLUSTERED",
    "PROXY-tutor",
    "PROXY-learner",
)


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ObjectMatrix:
    values: np.ndarray
    source_tag: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise ShapeError("object matrix must be two-dimensional")
        if not np.isfinite(values).all():
            raise DataError("object matrix contains non-finite values")
        if self.source_tag not in SOURCE_TAGS:
            raise ParameterError(f"unknown source tag {self.source_tag!r}")
        object.__setattr__(self, "values", values)

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    objects: ObjectMatrix
    labels: np.ndarray
    k: int | None = None
    lexicon_ref: int | None = None

    def __post_init__(self):
        labels = _frozen(self.labels, np.int8)
        if labels.ndim != 2 or labels.shape[0] != self.objects.rows:
            raise ShapeError("labels must have one row per object")
        object.__setattr__(self, "labels", labels)

    @property
    def X(self):
        return self.objects.values

    @property
    def Y(self):
        return self.labels


@dataclass(frozen=True, eq=False)
class PairedDataset:
    """Two views of the same physical objects; labels come from the tutor view."""

    tutor_view: ObjectMatrix
    learner_view: ObjectMatrix
    labels: np.ndarray | None = None
    k: int | None = None

    def __post_init__(self):
        if self.tutor_view.values.shape != self.learner_view.values.shape:
            raise ShapeError(
                f"views differ in shape: {self.tutor_view.values.shape} "
                f"vs {self.learner_view.values.shape}"
            )
        if self.labels is not None:
            labels = _frozen(self.labels, np.int8)
            if labels.shape[0] != self.tutor_view.rows:
                raise ShapeError("labels must have one row per object")
            object.__setattr__(self, "labels", labels)

    def learner_dataset(self):
        """The learning problem: learner-view features with tutor-view labels."""
        if self.labels is None:
            raise ParameterError("paired dataset has not been labeled yet")
        return LabeledDataset(self.learner_view, self.labels, self.k)


@dataclass(frozen=True)
class FoldSplit:
    folds: int
    train: tuple
    test: tuple
    seed: int

    def __iter__(self):
        return iter(zip(self.train, self.test))


def _check_count(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)


def gen_uniform(rows, n, seed, source_tag="SIM"):
    rows = _check_count("rows", rows)
    n = _check_count("n", n)
    seed = check_seed(seed)
    values = make_rng(seed).random((rows, n))
    meta = {"generator": "uniform", "seed": seed, "rng": RNG_ALGORITHM}
    return ObjectMatrix(values, source_tag, meta)


def gen_clustered(rows, n, cluster_count, spread, seed, return_info=False):
    """Gaussian blobs around uniform-random centers, clipped to ``[0, 1]``.

    With ``return_info`` also returns the ``(cluster_count, n)`` centers and
    the per-row cluster assignment.
    """
    rows = _check_count("rows", rows)
    n = _check_count("n", n)
    cluster_count = _check_count("cluster_count", cluster_count)
    if not spread > 0:
        raise ParameterError(f"spread must be > 0, got {spread}")
    seed = check_seed(seed)
    rng = make_rng(seed)
    centers = rng.random((cluster_count, n))
    assignment = rng.integers(cluster_count, size=rows)
    raw = centers[assignment] + rng.normal(0.0, spread, size=(rows, n))
    meta = {
        "generator": "clustered",
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "cluster_count": cluster_count,
        "spread": float(spread),
    }
    matrix = ObjectMatrix(np.clip(raw, 0.0, 1.0), "CLUSTERED", meta)
    if return_info:
        return matrix, centers, assignment
    return matrix


def gen_paired_proxy(rows, n, cluster_count, spread, noise, seed):
    """Synthetic stand-in for two-view data: clustered objects seen by the
    tutor, and the same objects plus independent Gaussian noise (std
    ``noise``, clipped to ``[0, 1]``) seen by the learner."""
    if not noise >= 0:
        raise ParameterError(f"noise must be >= 0, got {noise}")
    seed = check_seed(seed)
    base = gen_clustered(rows, n, cluster_count, spread, seed)
    rng = make_rng(seed ^ 0x9E3779B97F4A7C15)
    shifted = np.clip(base.values + rng.normal(0.0, noise, size=base.values.shape), 0.0, 1.0)
    meta = {**base.meta, "noise": float(noise), "proxy": True}
    return PairedDataset(
        ObjectMatrix(base.values, "PROXY-tutor", meta),
        ObjectMatrix(shifted, "PROXY-learner", meta),
    )


def minmax_scale(values, stats=None):
    """Per-column linear rescale to ``[0, 1]``; constant columns map to 0.

    Returns ``(scaled, stats)`` with ``stats = {"min": [...], "max": [...]}``.
    """
    values = np.asarray(values, dtype=np.float64)
    if stats is None:
        lo, hi = values.min(axis=0), values.max(axis=0)
    else:
        lo, hi = np.asarray(stats["min"], float), np.asarray(stats["max"], float)
        if lo.shape != (values.shape[1],):
            raise ShapeError("scaler statistics do not match the column count")
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (values - lo) / safe, 0.0)
    return scaled, {"min": lo.tolist(), "max": hi.tolist()}


def standardize(matrix, fit_stats=None):
    """Zero mean, unit (population) variance per column.

    Statistics come from ``matrix`` itself unless ``fit_stats`` (as returned
    by a previous call on training rows) is given. Zero-variance columns
    become zeros.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if fit_stats is None:
        mean = matrix.mean(axis=0)
        std = matrix.std(axis=0)
    else:
        mean = np.asarray(fit_stats["mean"], float)
        std = np.asarray(fit_stats["std"], float)
        if mean.shape != (matrix.shape[1],):
            raise ShapeError("standardization statistics do not match the column count")
    safe = np.where(std > 0, std, 1.0)
    out = np.where(std > 0, (matrix - mean) / safe, 0.0)
    return out, {"mean": mean, "std": std}


def label_with_tutor(objects, lexicon, k):
    if objects.n != lexicon.n:
        raise ShapeError(f"objects have {objects.n} dims, lexicon has {lexicon.n}")
    ids = describe_many(lexicon, objects.values, k)
    labels = np.zeros((objects.rows, lexicon.m), dtype=np.int8)
    np.put_along_axis(labels, ids, 1, axis=1)
    return LabeledDataset(objects, labels, int(k), lexicon.rng_seed)


def label_paired(pair, lexicon, k):
    tutor, learner = (pair.tutor_view, pair.learner_view) if isinstance(pair, PairedDataset) else pair
    labeled = label_with_tutor(tutor, lexicon, k)
    return PairedDataset(tutor, learner, labeled.labels, int(k))


def kfold_split(rows, folds, seed):
    rows = _check_count("rows", rows)
    folds = _check_count("folds", folds, minimum=2)
    if rows < folds:
        raise ParameterError(f"cannot split {rows} rows into {folds} folds")
    seed = check_seed(seed)
    perm = make_rng(seed).permutation(rows)
    tests = [np.sort(part) for part in np.array_split(perm, folds)]
    trains = []
    for i in range(folds):
        trains.append(np.sort(np.concatenate([t for j, t in enumerate(tests) if j != i])))
    return FoldSplit(folds, tuple(trains), tuple(tests), seed)


# ---- files -----------------------------------------------------------------

def _read_csv_matrix(path):
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open: {exc.strerror}", path=path) from None
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header:
            raise DataError("empty file", path=path, row=1)
        expected = [f"f{i}" for i in range(len(header))]
        if [h.strip() for h in header] != expected:
            raise DataError("header must be f0,f1,...", path=path, row=1)
        rows = []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(
                    f"expected {len(header)} cells, found {len(record)}", path=path, row=line_no
                )
            try:
                values = [float(cell) for cell in record]
            except ValueError:
                for col, cell in enumerate(record, start=1):
                    try:
                        float(cell)
                    except ValueError:
                        raise DataError(
                            f"non-numeric cell {cell!r}", path=path, row=line_no, column=col
                        ) from None
                raise
            for col, value in enumerate(values, start=1):
                if not np.isfinite(value):
                    raise DataError("non-finite cell", path=path, row=line_no, column=col)
            rows.append(values)
    if not rows:
        raise DataError("no data rows", path=path)
    return np.array(rows, dtype=np.float64)


def load_grounded(features_path, second_features_path=None):
    """Load one (GRO1) or two row-aligned (GRO2) feature files.

    Each matrix is linearly rescaled to ``[0, 1]`` per column. A pair comes
    back as an unlabeled :class:`PairedDataset`.
    """
    first = _read_csv_matrix(features_path)
    scaled, stats = minmax_scale(first)
    if second_features_path is None:
        meta = {"path": str(features_path), "scaler": stats}
        return ObjectMatrix(scaled, "GRO1", meta)
    second = _read_csv_matrix(second_features_path)
    if second.shape != first.shape:
        raise DataError(
            f"paired views differ in shape: {first.shape} vs {second.shape}",
            path=second_features_path,
        )
    scaled2, stats2 = minmax_scale(second)
    tutor = ObjectMatrix(scaled, "GRO2-tutor", {"path": str(features_path), "scaler": stats})
    learner = ObjectMatrix(
        scaled2, "GRO2-learner", {"path": str(second_features_path), "scaler": stats2}
    )
    return PairedDataset(tutor, learner)


def save_features(path, values):
    values = np.asarray(values, dtype=np.float64)
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(values.shape[1])])
        for row in values:
            writer.writerow([repr(float(x)) for x in row])


def labels_to_sets(labels):
    labels = np.asarray(labels)
    return [tuple(int(j) for j in np.flatnonzero(row)) for row in labels]


def sets_to_labels(sets, m):
    labels = np.zeros((len(sets), m), dtype=np.int8)
    for i, ids in enumerate(sets):
        for j in ids:
            if not 0 <= j < m:
                raise ParameterError(f"word id {j} outside [0, {m})")
            labels[i, j] = 1
    return labels


def save_labels(path, labels_or_sets):
    if isinstance(labels_or_sets, np.ndarray):
        sets = labels_to_sets(labels_or_sets)
    else:
        sets = [tuple(sorted(s)) for s in labels_or_sets]
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["word_ids"])
        for ids in sets:
            writer.writerow([" ".join(str(j) for j in ids)])


def load_labels(path):
    """Read a labels CSV into a list of sorted word-id tuples."""
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open: {exc.strerror}", path=path) from None
    sets = []
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["word_ids"]:
            raise DataError("header must be word_ids", path=path, row=1)
        for line_no, record in enumerate(reader, start=2):
            if len(record) > 1:
                raise DataError("expected a single column", path=path, row=line_no)
            cell = record[0] if record else ""
            try:
                ids = sorted({int(tok) for tok in cell.split()})
            except ValueError:
                raise DataError(f"non-integer word id in {cell!r}", path=path, row=line_no, column=1) from None
            if any(j < 0 for j in ids):
                raise DataError("negative word id", path=path, row=line_no, column=1)
            sets.append(tuple(ids))
    return sets


def save_metadata(path, meta):
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_metadata(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
