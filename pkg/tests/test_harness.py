import math

import numpy as np
import pytest

from wordlab.errors import ParameterError
from wordlab.harness import (
    DatasetConfig,
    ExperimentSpec,
    ResultRecord,
    TutorConfig,
    baseline_predictions,
    frequency_report,
    grid_cells,
    mean_f,
    prepare_dataset,
    read_records,
    run,
    run_baselines,
    run_grid_search,
    summarize,
    write_curves,
    write_records,
)
from wordlab.learners import LearnerSpec
from wordlab.tutor import chance_level

TINY_DATA = DatasetConfig(rows=10, n=3)
TINY_TUTOR = TutorConfig(m=8, k=2)
SMALL_DATA = DatasetConfig(rows=200, n=4)
SMALL_TUTOR = TutorConfig(m=20, k=3)
LEARNERS = (LearnerSpec("GaussianNB"), LearnerSpec("KNN", {"knn.k": 1}))


def spec(**kw):
    base = dict(dataset=SMALL_DATA, tutor=SMALL_TUTOR, learners=LEARNERS, seed=1)
    base.update(kw)
    return ExperimentSpec(**base)


def test_xval_two_folds_on_ten_rows():
    records = run(spec(dataset=TINY_DATA, tutor=TINY_TUTOR, folds=2))
    assert len(records) == 4
    assert sorted((r.learner, r.fold) for r in records) == [
        ("GaussianNB", 0), ("GaussianNB", 1), ("KNN", 0), ("KNN", 1)]
    assert all(r.status == "ok" and r.train_size == 5 for r in records)


def test_record_counts_for_sweeps():
    dims = run(spec(kind="dims_sweep", dims=(2, 5), folds=2))
    assert len(dims) == 2 * 2 * 2
    assert {r.n for r in dims} == {2, 5}
    sens = run(spec(kind="sensitivity_sweep", sensitivities=(0.3, 1.0), sweep_n=4, folds=3,
                    fold_limit=2))
    assert len(sens) == 2 * 2 * 2
    assert {r.sensitivity_p for r in sens} == {0.3, 1.0}
    online = run(spec(kind="online", checkpoints=(20, 50, 400), folds=2))
    assert len(online) == 2 * 2 * 3
    # the last checkpoint is past the 100 training rows and is clamped
    assert max(r.train_size for r in online) == 100


def test_keys_unique_and_runs_reproducible():
    s = spec(kind="dims_sweep", dims=(2, 3), folds=2)
    a, b = run(s), run(s)
    keys = [r.key for r in a]
    assert len(keys) == len(set(keys))
    assert [r.without_time() for r in a] == [r.without_time() for r in b]


def test_workers_do_not_change_results():
    a = run(spec(folds=2))
    b = run(spec(folds=2, workers=2))
    assert [r.without_time() for r in a] == [r.without_time() for r in b]


def test_seed_changes_data():
    a = prepare_dataset(spec(seed=1))
    b = prepare_dataset(spec(seed=2))
    assert not np.array_equal(a.X, b.X)
    assert (a.Y.sum(axis=1) == SMALL_TUTOR.k).all()


def test_train_cap_subsamples():
    records = run(spec(folds=2, train_cap=((4, 30),)))
    assert all(r.train_size == 30 for r in records)


def test_failures_become_records():
    # k=150 exceeds the 100 training rows of each fold
    records = run(spec(folds=2, learners=(LearnerSpec("KNN", {"knn.k": 150}),)))
    assert all(r.status.startswith("error") and math.isnan(r.sample_f) for r in records)


def test_grid_cells_and_single_cell_search():
    assert grid_cells({}) == [{}]
    assert grid_cells({"a": [1, 2], "b": [3]}) == [{"a": 1, "b": 3}, {"a": 2, "b": 3}]
    s = spec(kind="grid_search", folds=2, learners=(LearnerSpec("GaussianNB"),),
             grids={"GaussianNB": {"nb.var_floor": [1e-3]}})
    result = run_grid_search(s)
    assert result.best == {"GaussianNB": {"nb.var_floor": 1e-3}}
    assert len(result.records) == 2
    assert {r.dataset.split("/")[0] for r in result.records} == {"SIM-DEVELOP"}


def test_grid_search_picks_argmax():
    s = spec(kind="grid_search", folds=2, learners=(LearnerSpec("KNN"),),
             grids={"KNN": {"knn.k": [1, 3, 7]}})
    result = run_grid_search(s)
    cells = result.scores["KNN"]
    top = max(f for _, f in cells)
    first = next(c for c, f in cells if f == top)
    assert result.best["KNN"] == first


def test_grid_too_large_rejected():
    with pytest.raises(ParameterError):
        spec(kind="grid_search", learners=(LearnerSpec("KNN"),),
             grids={"KNN": {"knn.k": list(range(1, 40))}})


def test_spec_validation():
    with pytest.raises(ParameterError):
        spec(kind="bogus")
    with pytest.raises(ParameterError):
        spec(learners=(LearnerSpec("KNN"), LearnerSpec("KNN", {"knn.k": 3})))
    with pytest.raises(ParameterError):
        spec(checkpoints=(5, 5))
    with pytest.raises(ParameterError):
        TutorConfig(m=4, k=5)
    with pytest.raises(ParameterError):
        DatasetConfig(source="GRO1")


def test_baselines():
    rng = np.random.default_rng(0)
    Y = (rng.random((50, 10)) < 0.2).astype(np.int8)
    Y[:, 3] = 1
    freq = baseline_predictions(Y, 4, 2, "frequent")
    assert (freq.sum(axis=1) == 2).all() and freq[:, 3].all()
    rand = baseline_predictions(Y, 100, 3, "random", seed=1)
    assert (rand.sum(axis=1) == 3).all()
    with pytest.raises(ParameterError):
        baseline_predictions(Y, 1, 1, "oracle")


def test_random_baseline_near_chance():
    scores = run_baselines(spec(dataset=DatasetConfig(rows=2000, n=4),
                                tutor=TutorConfig(m=100, k=5), folds=4))
    # expected overlap k*k/m of k words gives F of k/m
    assert abs(scores["random"] - 5.0) < 1.5
    assert scores["frequent"] > scores["random"]
    assert chance_level(100, 5)[0] == 75_287_520


def fake_record(learner, fold, per_word, counts, f=50.0):
    return ResultRecord("e", "xval", learner, learner, "{}", "SIM", 3, 0.5, 0.0, fold, 10,
                        f, f, f, f, 0.1, "{}", "ok", tuple(per_word), tuple(counts))


def test_frequency_report():
    recs = [fake_record("A", 0, [0.0, 0.5, 1.0, float("nan")], [0, 5, 9, 0]),
            fake_record("A", 1, [0.0, 0.5, 1.0, float("nan")], [0, 5, 9, 0])]
    report = frequency_report(recs)["A"]
    assert [w for w, _, _ in report["rows"]] == [0, 1, 2]
    assert report["rows"][0] == (0, 0.0, 0.0)
    assert report["spearman"] == pytest.approx(1.0)
    flat = [fake_record("B", 0, [0.5, 0.5, 0.5], [3, 3, 3])]
    assert math.isnan(frequency_report(flat)["B"]["spearman"])


def test_frequency_report_uniform_counts_near_zero():
    rng = np.random.default_rng(3)
    counts = rng.integers(50, 60, size=200)
    recs = [fake_record("C", 0, rng.random(200), counts)]
    assert abs(frequency_report(recs)["C"]["spearman"]) < 0.2


def test_summaries_and_csv_round_trip(tmp_path):
    records = run(spec(folds=2))
    write_records(records, tmp_path / "r.csv", tmp_path / "r.jsonl")
    back = read_records(tmp_path / "r.csv")
    csv_only = {"per_word_f": None, "train_counts": None}
    assert [r.without_time() | csv_only for r in back] == [
        r.without_time() | csv_only for r in records]
    assert len((tmp_path / "r.jsonl").read_text().splitlines()) == len(records)
    rows = summarize(records)
    assert {r["learner"] for r in rows} == {"GaussianNB", "KNN"}
    assert mean_f(records, "KNN") == pytest.approx(
        np.mean([r.sample_f for r in records if r.learner == "KNN"]))
    write_curves(records, tmp_path / "c.csv")
    assert len((tmp_path / "c.csv").read_text().splitlines()) == 3
