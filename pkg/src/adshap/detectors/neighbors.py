"""Distance-based detectors: k-NN distance and Local Outlier Factor."""

import numpy as np

from .._core import knn_query
from .base import FittedDetector, register, require

_AGG = {"largest": lambda d: d[:, -1], "mean": lambda d: d.mean(1), "median": lambda d: np.median(d, 1)}


def _check_knn(p):
    require(int(p["k"]) >= 1, f"KNN: k must be >= 1, got {p['k']}")
    require(p["method"] in _AGG, f"KNN: method must be one of {sorted(_AGG)}")


@register("KNN", {"k": 5, "method": "largest"}, _check_knn)
class KNN(FittedDetector):
    """Distance to the k-th nearest training point (or mean/median of the k).

    Training scores leave each point out of its own neighbourhood.
    """

    def _fit(self, X, rng):
        k = int(self.config.k)
        require(X.shape[0] > k, f"KNN: need more than k={k} training rows, got {X.shape[0]}")
        self.train_ = X
        dist, _ = knn_query(X, X, k, True)
        return _AGG[self.config.method](dist)

    def _decision(self, X):
        dist, _ = knn_query(X, self.train_, int(self.config.k), False)
        return _AGG[self.config.method](dist)


def _check_lof(p):
    require(int(p["k"]) >= 1, f"LOF: k must be >= 1, got {p['k']}")


@register("LOF", {"k": 20}, _check_lof)
class LOF(FittedDetector):
    """Local Outlier Factor of a query relative to the training set.

    ``k`` is clamped to ``n_train - 1``. A 1e-10 guard keeps reachability
    densities finite on duplicated points.
    """

    def _fit(self, X, rng):
        require(X.shape[0] >= 2, "LOF: need at least 2 training rows")
        self.k_ = max(1, min(int(self.config.k), X.shape[0] - 1))
        self.train_ = X
        dist, idx = knn_query(X, X, self.k_, True)
        self.k_distance_ = dist[:, -1].copy()
        self.lrd_ = self._lrd(dist, idx)
        return (self.lrd_[idx] / self.lrd_[:, None]).mean(1)

    def _lrd(self, dist, idx):
        reach = np.maximum(dist, self.k_distance_[idx])
        return 1.0 / (reach.mean(1) + 1e-10)

    def _decision(self, X):
        dist, idx = knn_query(X, self.train_, self.k_, False)
        lrd = self._lrd(dist, idx)
        return (self.lrd_[idx] / lrd[:, None]).mean(1)
