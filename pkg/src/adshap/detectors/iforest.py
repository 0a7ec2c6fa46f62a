"""Isolation Forest."""

import math

import numpy as np

from .._core import iforest_path_lengths
from .base import FittedDetector, register, require

_EULER = 0.5772156649015329


def average_path_length(n):
    """Expected path length of an unsuccessful BST search over ``n`` points."""
    n = np.asarray(n, dtype=float)
    out = np.zeros_like(n)
    out[n == 2] = 1.0
    big = n > 2
    out[big] = 2.0 * (np.log(n[big] - 1.0) + _EULER) - 2.0 * (n[big] - 1.0) / n[big]
    return out


def _check(p):
    require(int(p["n_trees"]) >= 1, f"IFOREST: n_trees must be >= 1, got {p['n_trees']}")
    require(int(p["max_samples"]) >= 2, f"IFOREST: max_samples must be >= 2, got {p['max_samples']}")


def _grow(X, rng, max_depth, nodes):
    """Append one isolation tree to ``nodes``; returns the root id."""
    feature, threshold, left, right, value = nodes
    root = len(feature)
    stack = [(np.arange(X.shape[0]), 0, None, None)]
    while stack:
        rows, depth, parent, side = stack.pop()
        node = len(feature)
        if parent is not None:
            (left if side == 0 else right)[parent] = node
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        sub = X[rows]
        lo, hi = sub.min(0), sub.max(0)
        splittable = np.flatnonzero(hi > lo)
        if depth >= max_depth or len(rows) <= 1 or splittable.size == 0:
            value[node] = depth + float(average_path_length([len(rows)])[0])
            continue
        f = int(splittable[rng.integers(splittable.size)])
        t = float(rng.uniform(lo[f], hi[f]))
        if t <= lo[f]:
            t = float(np.nextafter(lo[f], hi[f]))
        feature[node] = f
        threshold[node] = t
        mask = sub[:, f] < t
        stack.append((rows[~mask], depth + 1, node, 1))
        stack.append((rows[mask], depth + 1, node, 0))
    return root


@register("IFOREST", {"n_trees": 100, "max_samples": 256}, _check)
class IsolationForest(FittedDetector):
    """Anomaly score ``2 ** (-E[h(x)] / c(psi))`` over random isolation trees."""

    def _fit(self, X, rng):
        n = X.shape[0]
        require(n >= 2, "IFOREST: need at least 2 training rows")
        psi = min(int(self.config.max_samples), n)
        max_depth = int(math.ceil(math.log2(max(psi, 2))))
        nodes = ([], [], [], [], [])
        roots = []
        for _ in range(int(self.config.n_trees)):
            sample = rng.choice(n, size=psi, replace=False)
            roots.append(_grow(X[sample], rng, max_depth, nodes))
        feature, threshold, left, right, value = nodes
        self.feature_ = np.array(feature, dtype=np.intp)
        self.threshold_split_ = np.array(threshold, dtype=float)
        self.left_ = np.array(left, dtype=np.intp)
        self.right_ = np.array(right, dtype=np.intp)
        self.leaf_value_ = np.array(value, dtype=float)
        self.roots_ = np.array(roots, dtype=np.intp)
        self.c_psi_ = float(average_path_length([psi])[0])
        return self._decision(X)

    def path_lengths(self, X):
        return iforest_path_lengths(
            np.ascontiguousarray(X, dtype=float),
            self.feature_, self.threshold_split_, self.left_, self.right_,
            self.leaf_value_, self.roots_,
        )

    def _decision(self, X):
        return 2.0 ** (-self.path_lengths(X) / self.c_psi_)
