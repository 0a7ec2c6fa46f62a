"""Experiment configuration: YAML loading and validation with line numbers.

Example::

    datasets:
      - {name: wine, path: data/wine.csv, label_column: label}
    detectors: [KNN, LOF, {kind: IFOREST, hyperparameters: {n_trees: 50}}]
    n_splits: 5
    seed: 0
    output_dir: runs

Relative dataset paths and ``output_dir`` resolve against the config file's
directory. Every key is optional except ``datasets``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..detectors import KINDS, DetectorConfig, DetectorError
from ..ensemble import REDUCTIONS, STRATEGIES
from ..similarity import KINDS as SIM_KINDS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    label_column: str | None = "label"


@dataclass(frozen=True)
class DetectorSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    contamination: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetSpec, ...]
    detectors: tuple[DetectorSpec, ...] = tuple(DetectorSpec(k) for k in KINDS)
    n_splits: int = 5
    train_fraction: float = 0.8
    standardize: bool = True
    background_k: int = 50
    shap_coalitions: int | None = None
    similarity_kinds: tuple[str, ...] = SIM_KINDS
    ensemble_size: int = 3
    strategies: tuple[str, ...] = STRATEGIES
    normalize_scores: bool = False
    diversity_reduction: str = "mean"
    regression_target: str = "gain"
    regression_metric: str = "PS"
    mantel_permutations: int = 999
    seed: int = 0
    output_dir: str = "runs"

    @property
    def detector_ids(self) -> tuple[str, ...]:
        return tuple(d.kind for d in self.detectors)

    def to_dict(self) -> dict:
        return {
            "datasets": [{"name": d.name, "path": d.path, "label_column": d.label_column} for d in self.datasets],
            "detectors": [
                {"kind": d.kind, "hyperparameters": dict(sorted(d.hyperparameters.items())), "contamination": d.contamination}
                for d in self.detectors
            ],
            "n_splits": self.n_splits,
            "train_fraction": self.train_fraction,
            "standardize": self.standardize,
            "background_k": self.background_k,
            "shap_coalitions": self.shap_coalitions,
            "similarity_kinds": list(self.similarity_kinds),
            "ensemble_size": self.ensemble_size,
            "strategies": list(self.strategies),
            "normalize_scores": self.normalize_scores,
            "diversity_reduction": self.diversity_reduction,
            "regression_target": self.regression_target,
            "regression_metric": self.regression_metric,
            "mantel_permutations": self.mantel_permutations,
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    def config_hash(self) -> str:
        """SHA-256 of the canonical config minus the output location."""
        d = self.to_dict()
        d.pop("output_dir")
        # dataset identity is its name and content, not where it was read from
        for ds in d["datasets"]:
            ds["sha256"] = _file_digest(ds.pop("path"))
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _file_digest(path):
    p = Path(path)
    if not p.is_file():
        return "missing:" + p.name
    return hashlib.sha256(p.read_bytes()).hexdigest()


def _line_index(node, prefix=(), out=None):
    """Map key paths to 1-based source lines."""
    out = {} if out is None else out
    out.setdefault(prefix, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = prefix + (k.value,)
            out[key] = k.start_mark.line + 1
            _line_index(v, key, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_index(v, prefix + (i,), out)
    return out


class _Validator:
    def __init__(self, source, lines):
        self.source = source
        self.lines = lines

    def fail(self, path, msg):
        line = None
        for cut in range(len(path), -1, -1):
            if path[:cut] in self.lines:
                line = self.lines[path[:cut]]
                break
        name = ".".join(str(p) if isinstance(p, str) else f"[{p}]" for p in path).replace(".[", "[")
        where = f"{self.source}:{line}" if line else str(self.source)
        raise ConfigError(f"{where}: {name or '<root>'}: {msg}")

    def integer(self, raw, path, lo=None):
        if isinstance(raw, bool) or not isinstance(raw, int):
            self.fail(path, f"expected an integer, got {raw!r}")
        if lo is not None and raw < lo:
            self.fail(path, f"must be >= {lo}, got {raw}")
        return raw

    def number(self, raw, path):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            self.fail(path, f"expected a number, got {raw!r}")
        return float(raw)

    def boolean(self, raw, path):
        if not isinstance(raw, bool):
            self.fail(path, f"expected true or false, got {raw!r}")
        return raw

    def choice(self, raw, path, options):
        if not isinstance(raw, str) or raw.upper() not in {o.upper() for o in options}:
            self.fail(path, f"expected one of {list(options)}, got {raw!r}")
        return raw.upper() if raw.upper() in options else raw.lower()

    def seq(self, raw, path):
        if not isinstance(raw, list) or not raw:
            self.fail(path, "expected a non-empty list")
        return raw


_TOP_KEYS = set(ExperimentConfig.__dataclass_fields__)


def parse_config(data, source="<config>", lines=None, base_dir: Path | None = None) -> ExperimentConfig:
    v = _Validator(source, lines or {})
    if not isinstance(data, dict):
        v.fail((), "top level must be a mapping")
    for key in data:
        if key not in _TOP_KEYS:
            v.fail((key,), f"unknown key; expected one of {sorted(_TOP_KEYS)}")
    if "datasets" not in data:
        v.fail((), "missing required key 'datasets'")
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    datasets = []
    for i, raw in enumerate(v.seq(data["datasets"], ("datasets",))):
        p = ("datasets", i)
        if not isinstance(raw, dict):
            v.fail(p, "each dataset must be a mapping with name and path")
        extra = set(raw) - {"name", "path", "label_column"}
        if extra:
            v.fail(p + (sorted(extra)[0],), "unknown dataset key")
        if not isinstance(raw.get("path"), str):
            v.fail(p + ("path",), "dataset path is required")
        path = Path(raw["path"])
        path = path if path.is_absolute() else (base_dir / path)
        name = raw.get("name", path.stem)
        if not isinstance(name, str) or not name or any(c in name for c in "/\\ "):
            v.fail(p + ("name",), f"invalid dataset name {name!r}")
        label = raw.get("label_column", "label")
        if label is not None and not isinstance(label, str):
            v.fail(p + ("label_column",), "must be a column name or null")
        datasets.append(DatasetSpec(name, str(path), label))
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        v.fail(("datasets",), f"dataset names must be unique, got {names}")

    detectors = []
    raw_dets = data.get("detectors", list(KINDS))
    for i, raw in enumerate(v.seq(raw_dets, ("detectors",))):
        p = ("detectors", i)
        if isinstance(raw, str):
            raw = {"kind": raw}
        if not isinstance(raw, dict) or "kind" not in raw:
            v.fail(p, "detector must be a kind name or a mapping with 'kind'")
        extra = set(raw) - {"kind", "hyperparameters", "contamination"}
        if extra:
            v.fail(p + (sorted(extra)[0],), "unknown detector key")
        kind = v.choice(raw["kind"], p + ("kind",), KINDS)
        hp = raw.get("hyperparameters", {}) or {}
        if not isinstance(hp, dict):
            v.fail(p + ("hyperparameters",), "expected a mapping")
        cont = v.number(raw.get("contamination", 0.1), p + ("contamination",))
        try:
            DetectorConfig(kind, hp, cont)
        except DetectorError as exc:
            v.fail(p, str(exc))
        detectors.append(DetectorSpec(kind, dict(hp), cont))
    ids = [d.kind for d in detectors]
    if len(set(ids)) != len(ids):
        v.fail(("detectors",), f"each detector kind may appear once, got {ids}")
    if len(ids) < 3:
        v.fail(("detectors",), "need at least 3 detectors (Mantel tests require m >= 3)")

    kw = {}
    if "n_splits" in data:
        kw["n_splits"] = v.integer(data["n_splits"], ("n_splits",), 1)
    if "train_fraction" in data:
        f = v.number(data["train_fraction"], ("train_fraction",))
        if not 0 < f < 1:
            v.fail(("train_fraction",), f"must be in (0, 1), got {f}")
        kw["train_fraction"] = f
    if "standardize" in data:
        kw["standardize"] = v.boolean(data["standardize"], ("standardize",))
    if "background_k" in data:
        kw["background_k"] = v.integer(data["background_k"], ("background_k",), 1)
    if "shap_coalitions" in data:
        raw = data["shap_coalitions"]
        kw["shap_coalitions"] = None if raw in (None, "auto") else v.integer(raw, ("shap_coalitions",), 2)
    if "similarity_kinds" in data:
        kinds = [v.choice(k, ("similarity_kinds", i), SIM_KINDS) for i, k in enumerate(v.seq(data["similarity_kinds"], ("similarity_kinds",)))]
        kw["similarity_kinds"] = tuple(k for k in SIM_KINDS if k in kinds)
    if "ensemble_size" in data:
        size = v.integer(data["ensemble_size"], ("ensemble_size",), 1)
        if size > len(ids):
            v.fail(("ensemble_size",), f"larger than the {len(ids)} configured detectors")
        kw["ensemble_size"] = size
    if "strategies" in data:
        strats = [v.choice(s, ("strategies", i), STRATEGIES) for i, s in enumerate(v.seq(data["strategies"], ("strategies",)))]
        kw["strategies"] = tuple(s for s in STRATEGIES if s in strats)
    if "normalize_scores" in data:
        kw["normalize_scores"] = v.boolean(data["normalize_scores"], ("normalize_scores",))
    if "diversity_reduction" in data:
        kw["diversity_reduction"] = v.choice(data["diversity_reduction"], ("diversity_reduction",), tuple(REDUCTIONS))
    if "regression_target" in data:
        kw["regression_target"] = v.choice(data["regression_target"], ("regression_target",), ("gain", "aucpr"))
    if "regression_metric" in data:
        kw["regression_metric"] = v.choice(data["regression_metric"], ("regression_metric",), SIM_KINDS)
    if "mantel_permutations" in data:
        kw["mantel_permutations"] = v.integer(data["mantel_permutations"], ("mantel_permutations",), 1)
    if "seed" in data:
        kw["seed"] = v.integer(data["seed"], ("seed",), 0)
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str):
            v.fail(("output_dir",), "expected a path string")
        out = Path(data["output_dir"])
        kw["output_dir"] = str(out if out.is_absolute() else base_dir / out)
    else:
        kw["output_dir"] = str(base_dir / "runs")

    cfg = ExperimentConfig(tuple(datasets), tuple(detectors), **kw)
    if cfg.regression_metric not in cfg.similarity_kinds:
        v.fail(("regression_metric",), f"{cfg.regression_metric} is not among similarity_kinds")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}{line}: malformed YAML: {getattr(exc, 'problem', exc)}") from None
    lines = _line_index(node) if node is not None else {}
    return parse_config(data, str(path), lines, path.parent)
