"""Cluster-Based Local Outlier Factor."""

import numpy as np

from .._kmeans import assign, kmeans
from .base import DetectorError, FittedDetector, register, require


def _check(p):
    require(int(p["n_clusters"]) >= 2, f"CBLOF: n_clusters must be >= 2, got {p['n_clusters']}")
    require(0.5 < float(p["alpha"]) < 1.0, f"CBLOF: alpha must be in (0.5, 1), got {p['alpha']}")
    require(float(p["beta"]) > 1.0, f"CBLOF: beta must be > 1, got {p['beta']}")
    require(int(p["n_init"]) >= 1, "CBLOF: n_init must be >= 1")


@register("CBLOF", {"n_clusters": 8, "alpha": 0.9, "beta": 5, "use_weights": False, "n_init": 10}, _check)
class CBLOF(FittedDetector):
    """Distance to the own large cluster's centre, or to the nearest large
    centre for members of small clusters.

    Clusters are ranked by size; the large/small boundary is the first rank
    meeting both the ``alpha`` coverage and ``beta`` size-ratio rules, else
    the first meeting either.
    """

    def _fit(self, X, rng):
        cfg = self.config
        k = int(cfg.n_clusters)
        require(X.shape[0] >= k, f"CBLOF: need at least n_clusters={k} rows, got {X.shape[0]}")
        res = kmeans(X, k, seed=int(rng.integers(2**31)), n_init=int(cfg.n_init))
        self.centers_ = res.centers
        sizes = np.bincount(res.labels, minlength=k)
        self.sizes_ = sizes
        order = np.argsort(-sizes, kind="stable")

        alpha_ok, beta_ok = [], []
        n = X.shape[0]
        for i in range(1, k):
            if sizes[order[:i]].sum() >= n * cfg.alpha:
                alpha_ok.append(i)
            if sizes[order[i]] > 0 and sizes[order[i - 1]] / sizes[order[i]] >= cfg.beta:
                beta_ok.append(i)
            elif sizes[order[i]] == 0 and sizes[order[i - 1]] > 0:
                beta_ok.append(i)
        both = sorted(set(alpha_ok) & set(beta_ok))
        if both:
            cut = both[0]
        elif alpha_ok:
            cut = alpha_ok[0]
        elif beta_ok:
            cut = beta_ok[0]
        else:
            raise DetectorError("CBLOF: could not separate small and large clusters")
        self.large_ = np.zeros(k, dtype=bool)
        self.large_[order[:cut]] = True
        self.large_centers_ = self.centers_[self.large_]
        return self._decision(X)

    def _decision(self, X):
        labels = assign(X, self.centers_)
        in_large = self.large_[labels]
        scores = np.empty(X.shape[0])
        if in_large.any():
            scores[in_large] = np.linalg.norm(X[in_large] - self.centers_[labels[in_large]], axis=1)
        small = ~in_large
        if small.any():
            diff = X[small, None, :] - self.large_centers_[None, :, :]
            scores[small] = np.sqrt((diff * diff).sum(-1)).min(1)
        if self.config.use_weights:
            scores = scores * self.sizes_[labels]
        return scores
