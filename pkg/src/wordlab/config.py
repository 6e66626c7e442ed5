"""Flat ``key=value`` configuration with dotted keys.

Lines starting with ``#`` and blank lines are ignored. Every key is checked
against a fixed schema and unknown keys are rejected by name. Layers are
applied in this order, later ones winning: built-in defaults, the tuned
hyperparameter file, the config file, ``--set`` overrides, and finally the
dedicated ``--seed`` / ``--workers`` / ``--out`` flags.

Learner settings use ``learner.<Name>.<key>``, grid overrides use
``grid.<Family>.<key>=v1,v2,...``.
"""
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, WordlabError
from .harness import GRIDS, KINDS, DatasetConfig, ExperimentSpec, TutorConfig
from .learners.core import DEFAULT_PARAMS, FAMILIES, NATIVE_CAPABLE, LearnerSpec
from .seeding import check_seed

ALL_LEARNERS = (
    "KNN,NearestCentroid,LogisticRegression,SGD,PassiveAggressive,GaussianNB,"
    "MultinomialNB,DecisionTree,RandomForest,ExtraTrees,AdaBoost,GradientBoosting,MLP"
)

DEFAULTS = {
    "kind": "xval",
    "seed": "0",
    "workers": "1",
    "out": "results",
    "verbose": "1",
    "experiment_id": "",
    "folds": "4",
    "fold_limit": "none",
    "learners": ALL_LEARNERS,
    "tuned": "default",
    "checkpoints": "100,200,300,400,500,1000,2000,3400",
    "dims": "10,100,1000,10000",
    "sensitivities": "0.1,0.25,0.5,0.75,1.0",
    "sweep_n": "100",
    "train_cap": "",
    "dataset.source": "SIM",
    "dataset.rows": "4532",
    "dataset.n": "17",
    "dataset.clusters": "10",
    "dataset.spread": "0.1",
    "dataset.features": "",
    "tutor.m": "100",
    "tutor.k": "5",
    "tutor.sensitivity_p": "0.5",
    "tutor.seed": "none",
}

LEARNER_FIELDS = ("preprocessing", "mode")


def _int(key, value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _float(key, value):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _int_list(key, value):
    return tuple(_int(key, v.strip()) for v in value.split(",") if v.strip())


def _optional_int(key, value):
    return None if value.lower() == "none" else _int(key, value)


def parse_scalar(value):
    """Typed hyperparameter value: ``none``, integer, float, or string."""
    text = value.strip()
    if text.lower() == "none":
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def format_scalar(value):
    return "none" if value is None else repr(value) if isinstance(value, float) else str(value)


def parse_learner_name(name):
    """``Family``, ``FamilyOvR`` or ``FamilyNative`` to ``(family, mode)``."""
    if name in FAMILIES:
        return name, None
    for suffix, mode in (("OvR", "one_vs_rest"), ("Native", "native")):
        if name.endswith(suffix) and name[: -len(suffix)] in FAMILIES:
            family = name[: -len(suffix)]
            if mode == "native" and family not in NATIVE_CAPABLE:
                raise ConfigError(f"{family} has no native multi-label mode")
            return family, mode
    raise ConfigError(f"unknown learner {name!r}; families: {', '.join(FAMILIES)}")


def _check_key(key, value):
    if key in DEFAULTS:
        return
    parts = key.split(".")
    if parts[0] in ("learner", "grid") and len(parts) >= 3:
        family = parse_learner_name(parts[1])[0] if parts[0] == "learner" else parts[1]
        if family not in FAMILIES:
            raise ConfigError(f"unknown key {key!r}: no learner family {parts[1]!r}")
        sub = ".".join(parts[2:])
        if parts[0] == "learner" and sub in LEARNER_FIELDS:
            return
        if sub not in DEFAULT_PARAMS[family]:
            raise ConfigError(
                f"unknown key {key!r}: {family} takes "
                f"{', '.join(sorted(DEFAULT_PARAMS[family])) or 'no hyperparameters'}"
            )
        return
    raise ConfigError(f"unknown key {key!r}")


def parse_config_text(text, source="<config>"):
    """Parse config text into an ordered ``{key: raw string}`` dict."""
    out = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}, line {line_no}: expected key=value, got {raw!r}")
        try:
            _check_key(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}, line {line_no}: {exc}") from None
        if key in out:
            raise ConfigError(f"{source}, line {line_no}: duplicate key {key!r}")
        out[key] = value
    return out


def read_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def format_config(values):
    return "".join(f"{k}={v}\n" for k, v in values.items())


def tuned_values(choice="default"):
    """Hyperparameters chosen by the shipped grid search (``learner.*`` keys)."""
    if choice == "none":
        return {}
    if choice == "default":
        text = resources.files("wordlab").joinpath("tuned.cfg").read_text(encoding="utf-8")
        values = parse_config_text(text, "tuned.cfg")
    else:
        values = read_config(choice)
    stray = [k for k in values if not k.startswith("learner.")]
    if stray:
        raise ConfigError(f"tuned file may only set learner.* keys, found {stray[0]!r}")
    return values


@dataclass(frozen=True)
class RunConfig:
    spec: ExperimentSpec
    out: Path
    verbose: int
    workers: int
    values: dict

    @property
    def resolved_text(self):
        return format_config(self.values)


def _learner_specs(values, seed):
    names = [n.strip() for n in values["learners"].split(",") if n.strip()]
    if not names:
        raise ConfigError("learners: at least one learner is required")
    specs = []
    for name in names:
        family, mode = parse_learner_name(name)
        params, pre = {}, None
        # family-level keys first, then keys addressed to the exact name
        for prefix in dict.fromkeys((f"learner.{family}.", f"learner.{name}.")):
            for key, value in values.items():
                if not key.startswith(prefix):
                    continue
                sub = key[len(prefix):]
                if sub == "preprocessing":
                    pre = value
                elif sub == "mode":
                    mode = value
                else:
                    params[sub] = parse_scalar(value)
        specs.append(LearnerSpec(family, params, pre, mode, seed))
    return tuple(specs)


def _grids(values):
    overrides = {}
    for key, value in values.items():
        if key.startswith("grid."):
            _, family, sub = key.split(".", 2)
            overrides.setdefault(family, {})[sub] = [parse_scalar(v) for v in value.split(",")]
    if not overrides:
        return None
    return {**GRIDS, **overrides}


def resolve(*layers):
    """Merge layers over the defaults, build the experiment and validate it."""
    values = dict(DEFAULTS)
    tuned_choice = DEFAULTS["tuned"]
    for layer in layers:
        tuned_choice = layer.get("tuned", tuned_choice)
    merged = dict(values)
    merged.update(tuned_values(tuned_choice))
    for layer in layers:
        for key, value in layer.items():
            _check_key(key, value)
            merged[key] = value
    values = merged
    try:
        kind = values["kind"]
        if kind not in KINDS:
            raise ConfigError(f"kind: expected one of {', '.join(KINDS)}, got {kind!r}")
        seed = check_seed(_int("seed", values["seed"]))
        workers = _int("workers", values["workers"])
        features = values["dataset.features"] or None
        dataset = DatasetConfig(
            source=values["dataset.source"],
            rows=_int("dataset.rows", values["dataset.rows"]),
            n=_int("dataset.n", values["dataset.n"]),
            clusters=_int("dataset.clusters", values["dataset.clusters"]),
            spread=_float("dataset.spread", values["dataset.spread"]),
            features_path=features,
        )
        tutor = TutorConfig(
            m=_int("tutor.m", values["tutor.m"]),
            k=_int("tutor.k", values["tutor.k"]),
            sensitivity_p=_float("tutor.sensitivity_p", values["tutor.sensitivity_p"]),
            seed=_optional_int("tutor.seed", values["tutor.seed"]),
        )
        caps = []
        for item in values["train_cap"].split(","):
            if item.strip():
                dims, sep, rows = item.partition(":")
                if not sep:
                    raise ConfigError(f"train_cap: expected n:rows pairs, got {item!r}")
                caps.append((_int("train_cap", dims), _int("train_cap", rows)))
        spec = ExperimentSpec(
            kind=kind,
            dataset=dataset,
            tutor=tutor,
            learners=_learner_specs(values, seed),
            folds=_int("folds", values["folds"]),
            fold_limit=_optional_int("fold_limit", values["fold_limit"]),
            checkpoints=_int_list("checkpoints", values["checkpoints"]),
            dims=_int_list("dims", values["dims"]),
            sensitivities=tuple(_float("sensitivities", v) for v in values["sensitivities"].split(",")),
            sweep_n=_int("sweep_n", values["sweep_n"]),
            train_cap=tuple(caps),
            grids=_grids(values),
            seed=seed,
            workers=workers,
            experiment_id=values["experiment_id"],
        )
    except ConfigError:
        raise
    except WordlabError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(spec, Path(values["out"]), _int("verbose", values["verbose"]), workers, values)
