"""Nine classical unsupervised anomaly detectors behind one contract."""

from . import cluster, ecdf, histogram, iforest, neighbors, pca  # noqa: F401  (registration)
from .base import (
    KINDS,
    DetectorConfig,
    DetectorError,
    FittedDetector,
    ScoreVector,
    default_config,
    fit,
    predict,
    score,
)

__all__ = [
    "KINDS",
    "DetectorConfig",
    "DetectorError",
    "FittedDetector",
    "ScoreVector",
    "default_config",
    "fit",
    "predict",
    "score",
]
