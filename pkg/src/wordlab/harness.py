"""Experiment orchestration.

Every experiment is cut into independent cells (learner x fold x sweep
point). Cells get their random streams from ``derive_seed(master, ...)``
and their results are merged by cell key, so the output does not depend on
the number of workers or on completion order.
"""
import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.stats import spearmanr

from .data import gen_clustered, gen_uniform, kfold_split, label_with_tutor, load_grounded
from .errors import ParameterError
from .learners import LearnerSpec, fit
from .learners.core import INCREMENTAL
from .metrics import evaluate
from .seeding import check_seed, derive_seed, make_rng
from .tutor import generate_lexicon

KINDS = ("xval", "dims_sweep", "sensitivity_sweep", "online", "grid_search")
SOURCES = ("SIM", "CLUSTERED", "GRO1")
STANDARD_DIMS = (10, 100, 1000, 10000)
STANDARD_SENSITIVITIES = (0.1, 0.25, 0.5, 0.75, 1.0)
STANDARD_CHECKPOINTS = (100, 200, 300, 400, 500, 1000, 2000, 3400)

# at most 32 cells per family
GRIDS = {
    "KNN": {"knn.k": [1, 3, 5, 9, 15]},
    "NearestCentroid": {},
    "LogisticRegression": {"lin.lr": [1.0, 4.0], "lin.epochs": [300, 1000],
                           "lin.l2": [0.0, 1e-4], "lin.decay": [0.0]},
    "SGD": {"lin.lr": [0.01, 0.03, 0.1], "lin.l2": [1e-6, 1e-5], "lin.epochs": [20, 60],
            "lin.loss": ["log", "hinge"]},
    "PassiveAggressive": {"pa.C": [0.001, 0.01, 0.1, 1.0], "pa.epochs": [1, 5]},
    "GaussianNB": {"nb.var_floor": [1e-9, 1e-6, 1e-3, 1e-2]},
    "MultinomialNB": {"nb.alpha": [0.001, 0.01, 0.1, 1.0]},
    "DecisionTree": {"tree.max_depth": [None, 6, 10, 15], "tree.min_leaf": [1, 5, 20]},
    "RandomForest": {"forest.max_features": ["sqrt", 9, 17], "tree.min_leaf": [1, 3]},
    "ExtraTrees": {"forest.max_features": ["sqrt", 9, 17], "tree.min_leaf": [1, 3]},
    "AdaBoost": {"ada.stages": [100, 300], "ada.depth": [1, 2]},
    "GradientBoosting": {"gb.lr": [0.25, 0.5, 1.0], "gb.stages": [100, 200]},
    "MLP": {"mlp.lr": [0.5, 1.0, 2.0, 4.0], "mlp.decay": [0.0, 0.001],
            "mlp.h1": [128, 256]},
}
MAX_GRID_CELLS = 32


def grid_cells(grid):
    """All hyperparameter combinations of ``grid`` in row-major order."""
    cells = [{}]
    for key, values in grid.items():
        cells = [{**c, key: v} for c in cells for v in values]
    return cells


@dataclass(frozen=True)
class DatasetConfig:
    source: str = "SIM"
    rows: int = 4532
    n: int = 17
    clusters: int = 10
    spread: float = 0.1
    features_path: str | None = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ParameterError(f"dataset source must be one of {SOURCES}, got {self.source!r}")
        if self.source == "GRO1" and not self.features_path:
            raise ParameterError("GRO1 needs a features path")
        for name in ("rows", "n", "clusters"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"dataset.{name} must be >= 1")
        if not self.spread > 0:
            raise ParameterError("dataset.spread must be > 0")


@dataclass(frozen=True)
class TutorConfig:
    m: int = 100
    k: int = 5
    sensitivity_p: float = 0.5
    seed: int | None = None

    def __post_init__(self):
        if self.m < 1 or not 1 <= self.k <= self.m:
            raise ParameterError(f"need 1 <= k <= m, got k={self.k}, m={self.m}")
        if not 0.0 < self.sensitivity_p <= 1.0:
            raise ParameterError(f"sensitivity_p must lie in (0, 1], got {self.sensitivity_p}")
        if self.seed is not None:
            check_seed(self.seed)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str = "xval"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    tutor: TutorConfig = field(default_factory=TutorConfig)
    learners: tuple = ()
    folds: int = 4
    fold_limit: int | None = None
    checkpoints: tuple = STANDARD_CHECKPOINTS
    dims: tuple = STANDARD_DIMS
    sensitivities: tuple = STANDARD_SENSITIVITIES
    sweep_n: int = 100
    train_cap: tuple = ()
    grids: dict | None = None
    seed: int = 0
    workers: int = 1
    experiment_id: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"kind must be one of {KINDS}, got {self.kind!r}")
        check_seed(self.seed)
        learners = tuple(
            spec if isinstance(spec, LearnerSpec) else LearnerSpec(spec) for spec in self.learners
        )
        if not learners:
            raise ParameterError("at least one learner is required")
        object.__setattr__(self, "learners", learners)
        names = [spec.name for spec in learners]
        if len(set(names)) != len(names):
            raise ParameterError(f"duplicate learners in {names}")
        if self.folds < 2:
            raise ParameterError("folds must be >= 2")
        if self.fold_limit is not None and not 1 <= self.fold_limit <= self.folds:
            raise ParameterError(f"fold_limit must lie in 1..{self.folds}")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")
        cps = tuple(int(c) for c in self.checkpoints)
        if not cps or cps[0] < 1 or any(b <= a for a, b in zip(cps, cps[1:])):
            raise ParameterError(f"checkpoints must be strictly increasing and positive: {cps}")
        object.__setattr__(self, "checkpoints", cps)
        if not self.dims or min(self.dims) < 1:
            raise ParameterError("dims must be positive")
        if not self.sensitivities or not all(0 < p <= 1 for p in self.sensitivities):
            raise ParameterError("sensitivities must lie in (0, 1]")
        if self.kind in ("dims_sweep", "sensitivity_sweep") and self.dataset.source == "GRO1":
            raise ParameterError("sweeps need simulated data; grounded dimensionality is fixed")
        object.__setattr__(self, "train_cap", tuple((int(a), int(b)) for a, b in self.train_cap))
        grids = GRIDS if self.grids is None else self.grids
        if self.kind == "grid_search":
            for spec in learners:
                size = len(grid_cells(grids.get(spec.family, {})))
                if size > MAX_GRID_CELLS:
                    raise ParameterError(f"{spec.family} grid has {size} cells (max {MAX_GRID_CELLS})")
        if not self.experiment_id:
            object.__setattr__(self, "experiment_id", f"{self.kind}-{self.seed}")

    @property
    def used_folds(self):
        return self.fold_limit or self.folds

    def cap_for(self, n):
        for dims, rows in self.train_cap:
            if dims == n:
                return rows
        return None


@dataclass(frozen=True)
class ResultRecord:
    experiment_id: str
    kind: str
    learner: str
    family: str
    hyperparams: str
    dataset: str
    n: int
    sensitivity_p: float
    x: float
    fold: int
    train_size: int
    sample_f: float
    macro_f: float
    precision: float
    recall: float
    wall_time: float
    seeds: str
    status: str = "ok"
    per_word_f: tuple | None = field(default=None, compare=False, repr=False)
    train_counts: tuple | None = field(default=None, compare=False, repr=False)

    @property
    def key(self):
        return (self.learner, self.dataset, self.fold)

    def without_time(self):
        d = asdict(self)
        d.pop("wall_time")
        # NaN marks absent words; compare the text form so NaN matches NaN
        d["per_word_f"] = repr(self.per_word_f)
        return d


CSV_FIELDS = [f.name for f in fields(ResultRecord) if f.name not in ("per_word_f", "train_counts")]


@dataclass
class Prepared:
    X: np.ndarray
    Y: np.ndarray
    tag: str
    n: int
    sensitivity_p: float
    seeds: dict
    objects: object = None
    lexicon: object = None


def prepare_dataset(spec, n=None, sensitivity_p=None, stream="SIM"):
    """Objects and tutor labels for one sweep point, from derived seeds."""
    ds, tu = spec.dataset, spec.tutor
    n = ds.n if n is None else int(n)
    p = tu.sensitivity_p if sensitivity_p is None else float(sensitivity_p)
    if ds.source == "GRO1":
        objects = load_grounded(ds.features_path)
        n = objects.n
        obj_seed = None
    else:
        obj_seed = derive_seed(spec.seed, "objects", stream, n, p)
        if ds.source == "SIM":
            objects = gen_uniform(ds.rows, n, obj_seed)
        else:
            objects = gen_clustered(ds.rows, n, ds.clusters, ds.spread, obj_seed)
    lex_seed = tu.seed if tu.seed is not None else derive_seed(spec.seed, "lexicon", stream, n, p)
    lexicon = generate_lexicon(tu.m, n, p, lex_seed)
    labeled = label_with_tutor(objects, lexicon, tu.k)
    tag = stream if ds.source == "SIM" else ds.source
    if stream == "SIM-DEVELOP" and ds.source != "SIM":
        tag = f"{ds.source}-DEVELOP"
    seeds = {"master": spec.seed, "objects": obj_seed, "lexicon": lex_seed,
             "folds": derive_seed(spec.seed, "folds", stream, n, p)}
    return Prepared(labeled.X, labeled.Y, tag, n, p, seeds, objects, lexicon)


def _fold_indices(spec, data, fold, split):
    train, test = split.train[fold], split.test[fold]
    cap = spec.cap_for(data.n)
    if cap is not None and cap < len(train):
        rng = make_rng(derive_seed(spec.seed, "subsample", data.tag, data.n, fold))
        train = np.sort(rng.choice(train, size=cap, replace=False))
    return train, test


@dataclass
class _Job:
    key: tuple
    spec: LearnerSpec
    X: np.ndarray
    Y: np.ndarray
    train: np.ndarray
    test: np.ndarray
    base: dict
    checkpoints: tuple = ()


def _record(job, dataset, x, train_size, report, wall, seeds, status="ok"):
    learner = job.spec
    return ResultRecord(
        experiment_id=job.base["experiment_id"],
        kind=job.base["kind"],
        learner=learner.name,
        family=learner.family,
        hyperparams=json.dumps(learner.params, sort_keys=True),
        dataset=dataset,
        n=job.base["n"],
        sensitivity_p=job.base["sensitivity_p"],
        x=float(x),
        fold=job.key[-1],
        train_size=int(train_size),
        sample_f=report.sample_f if report else float("nan"),
        macro_f=report.macro_f if report else float("nan"),
        precision=report.sample_precision if report else float("nan"),
        recall=report.sample_recall if report else float("nan"),
        wall_time=round(wall, 4),
        seeds=json.dumps(seeds, sort_keys=True),
        status=status,
        per_word_f=tuple(report.per_word_f.tolist()) if report else None,
        train_counts=tuple(int(c) for c in report.word_frequencies) if report else None,
    )


def _seeds(job):
    return {**job.base["seeds"], "learner": job.spec.seed}


def _run_job(job):
    """Train and evaluate one cell; failures become error records."""
    X, Y = job.X, job.Y
    Xte, Yte = X[job.test], Y[job.test]
    if not job.checkpoints:
        start = time.perf_counter()
        try:
            model = fit(job.spec, X[job.train], Y[job.train])
            report = evaluate(Yte, model.predict_labels(Xte), Y[job.train].sum(axis=0))
            status = "ok"
        except Exception as exc:  # recorded per cell, the run continues
            report, status = None, f"error: {type(exc).__name__}: {exc}"
        wall = time.perf_counter() - start
        return [_record(job, job.base["dataset"], job.base["x"], len(job.train), report, wall,
                        _seeds(job), status)]
    records = []
    model, done = None, 0
    for c in job.checkpoints:
        start = time.perf_counter()
        rows = job.train[:c]
        try:
            if job.spec.family in INCREMENTAL:
                if model is None:
                    model = fit(job.spec, X[rows], Y[rows], incremental=True)
                else:
                    model.partial_fit(X[job.train[done:c]], Y[job.train[done:c]])
            else:
                model = fit(job.spec, X[rows], Y[rows])
            report = evaluate(Yte, model.predict_labels(Xte), Y[rows].sum(axis=0))
            status = "ok"
        except Exception as exc:
            report, status = None, f"error: {type(exc).__name__}: {exc}"
            model = None
        done = c
        wall = time.perf_counter() - start
        records.append(_record(job, f"{job.base['dataset']}/first={c}", c, len(rows), report,
                               wall, _seeds(job), status))
    return records


def execute(jobs, workers=1):
    """Run jobs on a bounded pool and merge their records by cell key."""
    if workers == 1 or len(jobs) < 2:
        results = [_run_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    keyed = sorted(zip((job.key for job in jobs), results), key=lambda kv: kv[0])
    return [rec for _, recs in keyed for rec in recs]


def _jobs_for(spec, data, point_index, x, learners=None, checkpoints=()):
    split = kfold_split(len(data.X), spec.folds, data.seeds["folds"])
    point_tag = data.tag
    if spec.kind == "dims_sweep":
        point_tag = f"{data.tag}/n={data.n}"
    elif spec.kind == "sensitivity_sweep":
        point_tag = f"{data.tag}/p={data.sensitivity_p}"
    jobs = []
    for li, learner in enumerate(spec.learners if learners is None else learners):
        for fold in range(spec.used_folds):
            train, test = _fold_indices(spec, data, fold, split)
            cell_spec = learner.replace(
                seed=derive_seed(spec.seed, "learner", learner.name, point_tag, fold))
            base = {
                "experiment_id": spec.experiment_id,
                "kind": spec.kind,
                "dataset": point_tag,
                "n": data.n,
                "sensitivity_p": data.sensitivity_p,
                "x": x,
                "seeds": data.seeds,
            }
            cps = ()
            if checkpoints:
                # checkpoints past the training size collapse onto the full set
                cps = tuple(sorted({min(c, len(train)) for c in checkpoints}))
            jobs.append(_Job((point_index, li, fold), cell_spec, data.X, data.Y, train, test,
                             base, cps))
    return jobs


def run_xval(spec):
    data = prepare_dataset(spec)
    return execute(_jobs_for(spec, data, 0, 0.0), spec.workers)


def run_dims_sweep(spec):
    records = []
    for i, n in enumerate(spec.dims):
        data = prepare_dataset(spec, n=n)
        records += execute(_jobs_for(spec, data, i, n), spec.workers)
    return records


def run_sensitivity_sweep(spec):
    records = []
    for i, p in enumerate(spec.sensitivities):
        data = prepare_dataset(spec, n=spec.sweep_n, sensitivity_p=p)
        records += execute(_jobs_for(spec, data, i, p), spec.workers)
    return records


def run_online(spec):
    data = prepare_dataset(spec)
    return execute(_jobs_for(spec, data, 0, 0.0, checkpoints=spec.checkpoints), spec.workers)


@dataclass
class GridSearchResult:
    best: dict
    scores: dict
    records: list


def run_grid_search(spec):
    """Exhaustive search on a fresh development dataset.

    The best cell per family is the first one (in grid order) with the
    highest mean sample-F over the folds.
    """
    data = prepare_dataset(spec, stream="SIM-DEVELOP")
    grids = GRIDS if spec.grids is None else spec.grids
    cells_by_learner = []
    candidates = []
    for learner in spec.learners:
        cells = grid_cells(grids.get(learner.family, {}))
        cells_by_learner.append(cells)
        for ci, cell in enumerate(cells):
            tag = f"{learner.name}#{ci}"
            cand = learner.replace(hyperparams={**learner.hyperparams, **cell})
            candidates.append((tag, cand))
    jobs = []
    for ci, (tag, cand) in enumerate(candidates):
        for job in _jobs_for(spec, data, ci, ci, learners=[cand]):
            job.key = (ci, 0, job.key[-1])
            job.base = {**job.base, "dataset": f"{data.tag}/cell={tag}"}
            jobs.append(job)
    records = execute(jobs, spec.workers)
    by_cell = {}
    for rec in records:
        by_cell.setdefault(rec.dataset, []).append(rec.sample_f)
    best, scores = {}, {}
    for learner, cells in zip(spec.learners, cells_by_learner):
        rows = []
        for ci, cell in enumerate(cells):
            tag = f"{learner.name}#{ci}"
            fs = by_cell[f"{data.tag}/cell={tag}"]
            mean = float(np.mean(fs)) if not np.isnan(fs).any() else float("nan")
            rows.append((cell, mean))
        scores[learner.name] = rows
        valid = [i for i, (_, f) in enumerate(rows) if not np.isnan(f)]
        if valid:
            top = max(valid, key=lambda i: (rows[i][1], -i))
            best[learner.name] = rows[top][0]
    return GridSearchResult(best, scores, records)


RUNNERS = {
    "xval": run_xval,
    "dims_sweep": run_dims_sweep,
    "sensitivity_sweep": run_sensitivity_sweep,
    "online": run_online,
    "grid_search": run_grid_search,
}


def run(spec):
    return RUNNERS[spec.kind](spec)


# ---- baselines ----------------------------------------------------------------

def baseline_predictions(Y_train, rows, k, kind="frequent", seed=0):
    """Label-only baselines: the ``k`` globally most frequent training words
    for every row, or a uniform random ``k``-subset per row."""
    m = Y_train.shape[1]
    out = np.zeros((rows, m), dtype=np.int8)
    if kind == "frequent":
        counts = Y_train.sum(axis=0)
        top = np.argsort(-counts, kind="stable")[:k]
        out[:, top] = 1
    elif kind == "random":
        rng = make_rng(seed)
        for i in range(rows):
            out[i, rng.choice(m, size=k, replace=False)] = 1
    else:
        raise ParameterError(f"unknown baseline {kind!r}")
    return out


def run_baselines(spec, kinds=("frequent", "random")):
    """Baseline scores on the same data and folds as :func:`run_xval`."""
    data = prepare_dataset(spec)
    split = kfold_split(len(data.X), spec.folds, data.seeds["folds"])
    out = {}
    for kind in kinds:
        scores = []
        for fold in range(spec.used_folds):
            train, test = split.train[fold], split.test[fold]
            seed = derive_seed(spec.seed, "baseline", kind, fold)
            pred = baseline_predictions(data.Y[train], len(test), spec.tutor.k, kind, seed)
            scores.append(evaluate(data.Y[test], pred).sample_f)
        out[kind] = float(np.mean(scores))
    return out


# ---- summaries and export --------------------------------------------------

def summarize(records):
    """Mean scores per ``(learner, x)`` over the successful folds."""
    groups = {}
    for rec in records:
        groups.setdefault((rec.learner, rec.x), []).append(rec)
    rows = []
    for (learner, x), recs in groups.items():
        ok = [r for r in recs if r.status == "ok"]
        rows.append({
            "learner": learner,
            "x": x,
            "sample_f": float(np.mean([r.sample_f for r in ok])) if ok else float("nan"),
            "macro_f": float(np.mean([r.macro_f for r in ok])) if ok else float("nan"),
            "sample_f_std": float(np.std([r.sample_f for r in ok])) if ok else float("nan"),
            "folds_ok": len(ok),
            "folds_failed": len(recs) - len(ok),
        })
    return rows


def mean_f(records, learner, x=None):
    vals = [r.sample_f for r in records
            if r.learner == learner and r.status == "ok" and (x is None or r.x == x)]
    return float(np.mean(vals)) if vals else float("nan")


def frequency_report(records, train_label_counts=None):
    """Per-word training frequency against per-word F, per learner.

    Returns ``{learner: {"rows": [(word, count, f), ...], "spearman": rho}}``.
    Words absent from every test fold have no F and are left out.
    """
    out = {}
    for learner in sorted({r.learner for r in records}):
        recs = [r for r in records if r.learner == learner and r.per_word_f is not None]
        if not recs:
            continue
        F = np.array([r.per_word_f for r in recs], dtype=np.float64)
        if train_label_counts is not None:
            counts = np.asarray(train_label_counts, dtype=np.float64)
        else:
            counts = np.array([r.train_counts for r in recs], dtype=np.float64).mean(axis=0)
        seen = ~np.isnan(F).all(axis=0)
        f = np.full(F.shape[1], np.nan)
        f[seen] = np.nanmean(F[:, seen], axis=0)
        rows = [(int(j), float(counts[j]), float(f[j])) for j in np.flatnonzero(seen)]
        if len(rows) > 2 and np.ptp(counts[seen]) > 0 and np.ptp(f[seen]) > 0:
            rho = float(spearmanr(counts[seen], f[seen]).statistic)
        else:
            rho = float("nan")
        out[learner] = {"rows": rows, "spearman": rho}
    return out


def write_records(records, csv_path, jsonl_path=None):
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for rec in records:
            row = asdict(rec)
            writer.writerow({k: row[k] for k in CSV_FIELDS})
    if jsonl_path is not None:
        with open(jsonl_path, "w") as fh:
            for rec in records:
                row = asdict(rec)
                row["per_word_f"] = list(rec.per_word_f) if rec.per_word_f else None
                row["train_counts"] = list(rec.train_counts) if rec.train_counts else None
                fh.write(json.dumps(row, allow_nan=True) + "\n")


def read_records(csv_path):
    types = {f.name: f.type for f in fields(ResultRecord)}
    out = []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            conv = {}
            for key, value in row.items():
                t = types[key]
                conv[key] = int(value) if t is int else float(value) if t is float else value
            out.append(ResultRecord(**conv))
    return out


def write_curves(records, path, x_name="x"):
    """Tidy curve file: one line per learner and x with the mean F."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["learner", x_name, "sample_f", "sample_f_std", "macro_f", "folds"])
        for row in sorted(summarize(records), key=lambda r: (r["learner"], r["x"])):
            writer.writerow([row["learner"], row["x"], repr(row["sample_f"]),
                             repr(row["sample_f_std"]), repr(row["macro_f"]), row["folds_ok"]])
