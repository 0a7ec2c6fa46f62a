"""Datasets, CSV ingestion, seeded splits and train-fitted standardization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised for malformed or inconsistent dataset input."""


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """A numeric feature matrix with optional 0/1 anomaly labels.

    Labels are carried for evaluation only; no detector ever sees them.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    feature_names: tuple[str, ...] = ()
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[1] < 1:
            raise DataError("dataset needs at least one feature")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or Inf")
        object.__setattr__(self, "features", _frozen(X))

        if self.labels is not None:
            y = np.asarray(self.labels)
            if y.shape != (X.shape[0],):
                raise DataError(f"labels have shape {y.shape}, expected ({X.shape[0]},)")
            if not np.all((y == 0) | (y == 1)):
                raise DataError("labels must be 0 (normal) or 1 (anomaly)")
            object.__setattr__(self, "labels", _frozen(y, dtype=np.int8))

        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError(f"{len(names)} feature names for {X.shape[1]} features")
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, index, name=None) -> Dataset:
        index = np.asarray(index, dtype=np.intp)
        return Dataset(
            self.features[index],
            None if self.labels is None else self.labels[index],
            self.feature_names,
            name or self.name,
        )

    def with_features(self, features) -> Dataset:
        return Dataset(features, self.labels, self.feature_names, self.name)


@dataclass(frozen=True, eq=False)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int
    train_fraction: float
    train_index: np.ndarray = field(repr=False)
    test_index: np.ndarray = field(repr=False)


def load_csv(path, label_column: str | None = None, name: str | None = None) -> Dataset:
    """Read a headed, comma-separated numeric table.

    Every column except ``label_column`` becomes a feature, in file order.
    Cells must parse as floats; the label column must hold 0 or 1.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column is not None and label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")
        label_at = header.index(label_column) if label_column is not None else None

        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            values = []
            for j, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: column {header[j]!r} has non-numeric cell {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{lineno}: column {header[j]!r} is not finite")
                if j == label_at:
                    if v not in (0.0, 1.0):
                        raise DataError(f"{path}:{lineno}: label {cell!r} is not 0 or 1")
                    labels.append(int(v))
                else:
                    values.append(v)
            rows.append(values)

    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    names = [h for j, h in enumerate(header) if j != label_at]
    return Dataset(
        np.array(rows, dtype=float),
        np.array(labels) if label_at is not None else None,
        tuple(names),
        name or path.stem,
    )


def split(ds: Dataset, train_fraction: float = 0.8, seed: int = 0) -> SplitPair:
    """Shuffle rows with ``seed`` and cut the first ``floor(f * n)`` into train."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n_train = int(math.floor(train_fraction * ds.n))
    if n_train < 1 or n_train >= ds.n:
        raise DataError(f"train_fraction {train_fraction} leaves an empty part for n={ds.n}")
    perm = np.random.default_rng(seed).permutation(ds.n)
    train_idx, test_idx = perm[:n_train], perm[n_train:]
    return SplitPair(
        ds.subset(train_idx),
        ds.subset(test_idx),
        int(seed),
        float(train_fraction),
        _frozen(train_idx, np.intp),
        _frozen(test_idx, np.intp),
    )


def standardize(pair: SplitPair) -> SplitPair:
    """Z-score both parts with the train mean and (population) std.

    Constant train columns are only centred.
    """
    X = pair.train.features
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return SplitPair(
        pair.train.with_features((X - mu) / sd),
        pair.test.with_features((pair.test.features - mu) / sd),
        pair.seed,
        pair.train_fraction,
        pair.train_index,
        pair.test_index,
    )


def make_synthetic(n: int = 200, d: int = 5, anomaly_fraction: float = 0.05, seed: int = 0) -> Dataset:
    """Gaussian normals plus shifted, widened anomalies, rows shuffled."""
    if n < 10 or d < 1 or not 0.0 < anomaly_fraction < 0.5:
        raise DataError(f"invalid synthetic bounds n={n} d={d} fraction={anomaly_fraction}")
    rng = np.random.default_rng(seed)
    n_anom = max(1, int(round(n * anomaly_fraction)))
    normals = rng.standard_normal((n - n_anom, d))
    shift = rng.choice([-1.0, 1.0], size=d) * 3.0
    anomalies = shift + 2.0 * rng.standard_normal((n_anom, d))
    X = np.vstack([normals, anomalies])
    y = np.r_[np.zeros(n - n_anom, dtype=int), np.ones(n_anom, dtype=int)]
    order = rng.permutation(n)
    return Dataset(X[order], y[order], name=f"synthetic-{seed}")
