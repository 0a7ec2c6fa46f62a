"""Histogram-density detectors: HBOS and LODA."""

import numpy as np

from .base import FittedDetector, register, require


def _check_hbos(p):
    require(int(p["n_bins"]) >= 2, f"HBOS: n_bins must be >= 2, got {p['n_bins']}")
    require(float(p["alpha"]) > 0, "HBOS: alpha must be > 0")
    require(float(p["tol"]) >= 0, "HBOS: tol must be >= 0")


@register("HBOS", {"n_bins": 10, "alpha": 0.1, "tol": 0.5}, _check_hbos)
class HBOS(FittedDetector):
    """Sum over features of ``-log2(density + alpha)`` from static histograms.

    Values just outside the training range (within ``tol`` bin widths) use
    the edge bin; anything further out gets the lowest density of that
    feature.
    """

    def _fit(self, X, rng):
        nb = int(self.config.n_bins)
        self.edges_ = []
        self.log_density_ = []
        for j in range(X.shape[1]):
            hist, edges = np.histogram(X[:, j], bins=nb, density=True)
            self.edges_.append(edges)
            self.log_density_.append(np.log2(hist + self.config.alpha))
        return self._decision(X)

    def _decision(self, X):
        nb = int(self.config.n_bins)
        tol = self.config.tol
        total = np.zeros(X.shape[0])
        for j, (edges, logd) in enumerate(zip(self.edges_, self.log_density_)):
            x = X[:, j]
            b = np.digitize(x, edges, right=False)
            s = np.empty_like(x)
            inside = (b >= 1) & (b <= nb)
            s[inside] = logd[b[inside] - 1]
            low = b == 0
            near = (edges[0] - x) <= (edges[1] - edges[0]) * tol
            s[low] = np.where(near[low], logd[0], logd.min())
            high = b == nb + 1
            near = (x - edges[-1]) <= (edges[-1] - edges[-2]) * tol
            s[high] = np.where(near[high], logd[nb - 1], logd.min())
            total -= s
        return total


def _check_loda(p):
    require(int(p["n_projections"]) >= 1, "LODA: n_projections must be >= 1")
    require(int(p["n_bins"]) >= 2, "LODA: n_bins must be >= 2")


@register("LODA", {"n_projections": 100, "n_bins": 10}, _check_loda)
class LODA(FittedDetector):
    """Mean negative log-density over sparse random one-dimensional projections.

    Each projection keeps ``floor(sqrt(d))`` non-zero Gaussian weights.
    """

    def _fit(self, X, rng):
        d = X.shape[1]
        n_proj, nb = int(self.config.n_projections), int(self.config.n_bins)
        n_zero = d - int(np.sqrt(d))
        W = rng.standard_normal((n_proj, d))
        for i in range(n_proj):
            W[i, rng.permutation(d)[:n_zero]] = 0.0
        self.projections_ = W
        self.support_ = [np.flatnonzero(w) for w in W]
        P = self._project(X)
        self.hist_ = np.empty((n_proj, nb))
        self.limits_ = np.empty((n_proj, nb + 1))
        for i in range(n_proj):
            h, lim = np.histogram(P[:, i], bins=nb)
            h = h + 1e-12
            self.hist_[i] = h / h.sum()
            self.limits_[i] = lim
        self.neg_log_hist_ = -np.log(self.hist_)
        return self._decision(X)

    def _project(self, X):
        # elementwise accumulation in a fixed order: a BLAS product may round a
        # lone row differently from the same row inside a batch, which flips
        # values sitting on a bin edge
        P = np.zeros((X.shape[0], len(self.support_)))
        for i, cols in enumerate(self.support_):
            for j in cols:
                P[:, i] += X[:, j] * self.projections_[i, j]
        return P

    def _decision(self, X):
        nb = int(self.config.n_bins)
        P = self._project(X)
        out = np.zeros(X.shape[0])
        for i in range(P.shape[1]):
            b = np.searchsorted(self.limits_[i, : nb - 1], P[:, i], side="left")
            out += self.neg_log_hist_[i, b]
        return out / P.shape[1]
