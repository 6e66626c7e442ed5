import json

import pytest

from wordlab.cli import main
from wordlab.config import ConfigError, format_config, parse_config_text, parse_learner_name, resolve
from wordlab.data import load_labels, save_labels
from wordlab.tutor import load_lexicon

SMALL = ["--set", "dataset.rows=60", "--set", "dataset.n=4", "--set", "tutor.m=12",
         "--set", "tutor.k=3"]


def gen(out, *extra):
    return main(["gen", *SMALL, "--seed", "5", "--out", str(out), *extra])


def test_gen_is_byte_reproducible(tmp_path):
    assert gen(tmp_path / "a") == 0
    assert gen(tmp_path / "b") == 0
    for name in ("features.csv", "labels.csv", "lexicon.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    metas = [json.loads((tmp_path / d / "metadata.json").read_text()) for d in "ab"]
    for meta in metas:
        meta["config"].pop("out")
    assert metas[0] == metas[1]


def test_gen_standard_shape(tmp_path):
    assert main(["gen", "--seed", "1", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "features.csv").read_text().splitlines()
    assert len(lines) == 4533 and len(lines[1].split(",")) == 17
    labels = load_labels(tmp_path / "labels.csv")
    assert len(labels) == 4532 and all(len(s) == 5 for s in labels)
    lex = load_lexicon(tmp_path / "lexicon.txt")
    assert lex.prototypes.shape == (100, 17)


def test_metadata_reproduces_the_run(tmp_path):
    assert gen(tmp_path / "a") == 0
    meta = json.loads((tmp_path / "a" / "metadata.json").read_text())
    cfg = tmp_path / "replay.cfg"
    cfg.write_text(format_config(meta["config"]))
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    for name in ("features.csv", "labels.csv", "lexicon.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_k_larger_than_m_fails(tmp_path, capsys):
    assert gen(tmp_path, "--set", "tutor.k=20") == 1
    assert "k" in capsys.readouterr().err


def test_unknown_key_named(tmp_path, capsys):
    assert gen(tmp_path, "--set", "bogus=3") == 1
    assert "bogus" in capsys.readouterr().err
    assert gen(tmp_path, "--set", "learner.MLP.knn.k=3") == 1


def test_bad_flag_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--no-such-flag"])
    assert exc.value.code == 1


def test_run_dims_sweep_curves(tmp_path, capsys):
    args = ["run", *SMALL, "--set", "kind=dims_sweep", "--set", "dims=2,3,4,5",
            "--set", "folds=2", "--set", "learners=GaussianNB,KNN",
            "--out", str(tmp_path)]
    assert main(args) == 0
    curves = (tmp_path / "curves.csv").read_text().splitlines()
    assert curves[0].startswith("learner,n,")
    ns = {line.split(",")[1] for line in curves[1:]}
    assert len(ns) == 4 and len(curves) == 1 + 2 * 4
    assert "GaussianNB" in capsys.readouterr().out
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["config"]["kind"] == "dims_sweep"


def test_run_all_failed_exit_code(tmp_path):
    args = ["run", *SMALL, "--set", "folds=2", "--set", "learners=KNN",
            "--set", "learner.KNN.knn.k=100", "--out", str(tmp_path)]
    assert main(args) == 3


def test_score_hand_fixture(tmp_path, capsys, hand_fixture):
    truth, pred, expect = hand_fixture
    save_labels(tmp_path / "t.csv", truth)
    save_labels(tmp_path / "p.csv", pred)
    assert main(["score", str(tmp_path / "t.csv"), str(tmp_path / "p.csv"), "--m", "4"]) == 0
    out = capsys.readouterr().out
    assert f"sample-F   {expect['sample_f']:.2f}" in out
    assert f"macro-F    {expect['macro_f']:.2f}" in out


def test_score_row_mismatch(tmp_path):
    save_labels(tmp_path / "t.csv", [(0,), (1,)])
    save_labels(tmp_path / "p.csv", [(0,)])
    assert main(["score", str(tmp_path / "t.csv"), str(tmp_path / "p.csv")]) == 2
    assert main(["score", str(tmp_path / "missing.csv"), str(tmp_path / "p.csv")]) == 2


def test_config_parsing():
    values = parse_config_text("# comment\nseed = 3\n\ntutor.k=4\n")
    assert values == {"seed": "3", "tutor.k": "4"}
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("seed=1\nseed=2\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("no equals sign\n")
    assert parse_learner_name("NearestCentroidOvR")[0] == "NearestCentroid"
    cfg = resolve({"seed": "9", "learners": "KNN", "learner.KNN.knn.k": "7"})
    assert cfg.spec.seed == 9
    assert cfg.spec.learners[0].params["knn.k"] == 7
