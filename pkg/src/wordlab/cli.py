"""Command line front end: ``wordlab gen | run | score``.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 execution
failure.
"""
import argparse
import json
import logging
import sys

from . import __version__, harness
from .config import format_scalar, read_config, resolve
from .data import load_labels, save_features, save_labels, save_metadata, sets_to_labels
from .errors import ConfigError, DataError, ParameterError, WordlabError
from .metrics import evaluate
from .tutor import save_lexicon

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_FAIL = 0, 1, 2, 3

log = logging.getLogger("wordlab")

CURVE_AXIS = {"dims_sweep": "n", "sensitivity_sweep": "sensitivity_p", "online": "train_size"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--workers", type=int, help="worker processes (overrides config)")
    p.add_argument("--out", help="output directory (overrides config)")


def build_parser():
    parser = _Parser(prog="wordlab", description="Word-learning benchmark with a simulated tutor.")
    parser.add_argument("--version", action="version", version=f"wordlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    gen = sub.add_parser("gen", help="write a tutor-labeled dataset and its lexicon")
    _add_common(gen)
    run = sub.add_parser("run", help="run an experiment and write its results")
    _add_common(run)
    score = sub.add_parser("score", help="score predicted label sets against the truth")
    score.add_argument("truth")
    score.add_argument("pred")
    score.add_argument("--m", type=int, help="vocabulary size (default: largest id + 1)")
    return parser


def _layers(args):
    layers = []
    if args.config:
        layers.append(read_config(args.config))
    sets = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        sets[key.strip()] = value.strip()
    flags = {}
    if args.seed is not None:
        flags["seed"] = str(args.seed)
    if args.workers is not None:
        flags["workers"] = str(args.workers)
    if args.out is not None:
        flags["out"] = args.out
    return layers + [sets, flags]


def _metadata(cfg, command, extra=None):
    return {
        "command": command,
        "version": __version__,
        "config": cfg.values,
        **(extra or {}),
    }


def cmd_gen(cfg):
    spec = cfg.spec
    data = harness.prepare_dataset(spec)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    save_features(out / "features.csv", data.X)
    save_labels(out / "labels.csv", data.Y)
    save_lexicon(data.lexicon, out / "lexicon.txt")
    save_metadata(out / "metadata.json", _metadata(cfg, "gen", {
        "dataset": data.tag, "rows": int(data.X.shape[0]), "n": data.n,
        "seeds": data.seeds,
    }))
    print(f"wrote {data.X.shape[0]} x {data.n} features, labels and lexicon to {out}")
    return EXIT_OK


def _print_summary(records, kind):
    rows = harness.summarize(records)
    if kind == "xval":
        print(f"{'learner':<24}{'sample-F':>10}{'macro-F':>10}{'failed':>8}")
        for row in rows:
            print(f"{row['learner']:<24}{row['sample_f']:>10.2f}{row['macro_f']:>10.2f}"
                  f"{row['folds_failed']:>8}")
        return
    axis = CURVE_AXIS.get(kind, "x")
    print(f"{'learner':<24}{axis:>14}{'sample-F':>10}{'failed':>8}")
    for row in sorted(rows, key=lambda r: (r["learner"], r["x"])):
        print(f"{row['learner']:<24}{row['x']:>14g}{row['sample_f']:>10.2f}"
              f"{row['folds_failed']:>8}")


def cmd_run(cfg):
    spec = cfg.spec
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %s with %d learner(s), seed %d", spec.kind, len(spec.learners), spec.seed)
    result = harness.run(spec)
    records = result.records if spec.kind == "grid_search" else result
    harness.write_records(records, out / "results.csv", out / "results.jsonl")
    extra = {}
    if spec.kind in CURVE_AXIS:
        harness.write_curves(records, out / "curves.csv", CURVE_AXIS[spec.kind])
    if spec.kind == "grid_search":
        lines = ["# hyperparameters selected by grid search"]
        for name, params in result.best.items():
            for key, value in params.items():
                lines.append(f"learner.{name}.{key}={format_scalar(value)}")
        (out / "tuned.cfg").write_text("\n".join(lines) + "\n", encoding="utf-8")
        extra["grid_scores"] = {
            name: [{"params": params, "sample_f": f} for params, f in rows]
            for name, rows in result.scores.items()
        }
        for name, rows in result.scores.items():
            best = result.best.get(name)
            f = max((f for _, f in rows), default=float("nan"))
            print(f"{name:<24}{f:>10.2f}  {json.dumps(best, sort_keys=True)}")
    else:
        _print_summary(records, spec.kind)
    save_metadata(out / "metadata.json", _metadata(cfg, "run", extra))
    failed = [r for r in records if r.status != "ok"]
    for rec in failed:
        print(f"failed: {rec.learner} {rec.dataset} fold {rec.fold}: {rec.status}", file=sys.stderr)
    if records and len(failed) == len(records):
        return EXIT_FAIL
    return EXIT_OK


def cmd_score(truth_path, pred_path, m=None):
    truth = load_labels(truth_path)
    pred = load_labels(pred_path)
    if len(truth) != len(pred):
        raise DataError(f"{len(truth)} truth rows vs {len(pred)} prediction rows", path=pred_path)
    if m is None:
        m = 1 + max((j for s in truth + pred for j in s), default=0)
    report = evaluate(sets_to_labels(truth, m), sets_to_labels(pred, m))
    print(f"sample-F   {report.sample_f:.2f}")
    print(f"precision  {report.sample_precision:.2f}")
    print(f"recall     {report.sample_recall:.2f}")
    print(f"macro-F    {report.macro_f:.2f}")
    return report


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "score":
            cmd_score(args.truth, args.pred, args.m)
            return EXIT_OK
        cfg = resolve(*_layers(args))
        logging.basicConfig(
            level=logging.INFO if cfg.verbose else logging.WARNING,
            format="%(levelname)s %(message)s",
        )
        if args.command == "gen":
            return cmd_gen(cfg)
        return cmd_run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WordlabError, ArithmeticError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
