"""Common fit / score / predict contract for the detector zoo."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..data import Dataset

KINDS = ("KNN", "LOF", "CBLOF", "IFOREST", "PCA", "HBOS", "ECOD", "COPOD", "LODA")


class DetectorError(ValueError):
    """Bad configuration, or data the detector cannot be fitted on."""


@dataclass(frozen=True)
class DetectorConfig:
    kind: str
    hyperparameters: dict[str, Any] = field(default_factory=dict)
    contamination: float = 0.1
    seed: int = 0

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in _REGISTRY:
            raise DetectorError(f"unknown detector kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        object.__setattr__(self, "kind", kind)
        if not 0.0 < self.contamination <= 0.5:
            raise DetectorError(f"contamination must be in (0, 0.5], got {self.contamination}")
        entry = _REGISTRY[kind]
        unknown = set(self.hyperparameters) - set(entry.defaults)
        if unknown:
            raise DetectorError(f"{kind}: unknown hyperparameters {sorted(unknown)}")
        params = {**entry.defaults, **self.hyperparameters}
        entry.validate(params)
        object.__setattr__(self, "hyperparameters", params)

    def __getattr__(self, name):
        # expose hyperparameters as attributes: default_config("KNN").k
        params = self.__dict__.get("hyperparameters", {})
        if name in params:
            return params[name]
        raise AttributeError(name)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "hyperparameters": dict(self.hyperparameters),
            "contamination": self.contamination,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class ScoreVector:
    values: np.ndarray
    detector_id: str = ""
    dataset_id: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise DetectorError("score vector must be 1-D and finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


class FittedDetector:
    """A trained detector. Higher scores are more anomalous for every kind.

    Subclasses implement ``_fit`` (returning training scores) and
    ``_decision(X)``; all randomness is consumed inside ``_fit``.
    """

    def __init__(self, config: DetectorConfig):
        self.config = config
        self.n_features_ = None
        self.threshold_ = None

    @property
    def detector_id(self) -> str:
        return self.config.kind

    def _fit(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def _decision(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def decision_function(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features_:
            raise DetectorError(f"{self.detector_id}: expected {self.n_features_} features, got {X.shape[1]}")
        if X.shape[0] == 0:
            return np.empty(0)
        return self._decision(X)

    def __call__(self, X):
        return self.decision_function(X)


@dataclass(frozen=True)
class _Entry:
    cls: type
    defaults: dict
    validate: Callable[[dict], None]


_REGISTRY: dict[str, _Entry] = {}


def register(kind, defaults, validate=lambda p: None):
    def deco(cls):
        _REGISTRY[kind] = _Entry(cls, dict(defaults), validate)
        return cls

    return deco


def require(cond, msg):
    if not cond:
        raise DetectorError(msg)


def default_config(kind: str, **overrides) -> DetectorConfig:
    """Reference-library defaults for ``kind`` (contamination 0.1)."""
    return DetectorConfig(kind, hyperparameters=overrides)


def fit(config: DetectorConfig, train: Dataset | np.ndarray) -> FittedDetector:
    X = train.features if isinstance(train, Dataset) else np.asarray(train, dtype=float)
    X = np.ascontiguousarray(X, dtype=float)
    det = _REGISTRY[config.kind].cls(config)
    det.n_features_ = X.shape[1]
    rng = np.random.default_rng(config.seed)
    train_scores = np.asarray(det._fit(X, rng), dtype=float)
    if not np.all(np.isfinite(train_scores)):
        raise DetectorError(f"{config.kind}: non-finite training scores")
    det.threshold_ = float(np.quantile(train_scores, 1.0 - config.contamination))
    det.train_scores_ = train_scores
    return det


def score(det: FittedDetector, X: Dataset | np.ndarray) -> ScoreVector:
    values = det.decision_function(X.features if isinstance(X, Dataset) else X)
    return ScoreVector(values, det.detector_id, X.name if isinstance(X, Dataset) else "")


def predict(det: FittedDetector, X: Dataset | np.ndarray) -> frozenset[int]:
    """Indices whose score strictly exceeds the fitted threshold."""
    values = det.decision_function(X.features if isinstance(X, Dataset) else X)
    return frozenset(np.flatnonzero(values > det.threshold_).tolist())
