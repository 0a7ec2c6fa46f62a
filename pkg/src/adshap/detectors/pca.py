"""Principal-component reconstruction detector."""

import numpy as np

from .base import DetectorError, FittedDetector, register, require


def _check(p):
    nc = p["n_components"]
    require(nc is None or int(nc) >= 1, f"PCA: n_components must be None or >= 1, got {nc}")


@register("PCA", {"n_components": None, "weighted": True, "standardization": True}, _check)
class PCA(FittedDetector):
    """Reconstruction error summed over every truncation level.

    For each ``k`` in ``1..r`` the residual norm of the rank-``k``
    reconstruction is weighted by the cumulative explained-variance ratio of
    the first ``k`` components (unit weights when ``weighted`` is off). A
    point inside the span of the leading components scores zero.
    """

    def _fit(self, X, rng):
        require(X.shape[0] >= 2, "PCA: need at least 2 training rows")
        if self.config.standardization:
            self.mean_ = X.mean(0)
            sd = X.std(0)
            self.scale_ = np.where(sd > 0, sd, 1.0)
        else:
            self.mean_ = X.mean(0)
            self.scale_ = np.ones(X.shape[1])
        Z = (X - self.mean_) / self.scale_
        _, s, vt = np.linalg.svd(Z, full_matrices=False)
        var = s**2
        if var.sum() <= 0:
            raise DetectorError("PCA: training matrix has rank 0")
        r = len(s)
        if self.config.n_components is not None:
            r = min(r, int(self.config.n_components))
        self.components_ = vt[:r]
        ratio = var[:r] / var.sum()
        self.weights_ = np.cumsum(ratio) if self.config.weighted else np.ones(r)
        return self._decision(X)

    def _decision(self, X):
        Z = (X - self.mean_) / self.scale_
        coef = Z @ self.components_.T
        outside = Z - coef @ self.components_
        off_span = (outside * outside).sum(1)
        sq = coef * coef
        # tail[:, k-1] = energy in components k+1..r
        tail = np.cumsum(sq[:, ::-1], axis=1)[:, ::-1]
        tail = np.concatenate([tail[:, 1:], np.zeros((len(Z), 1))], axis=1)
        resid = np.sqrt(tail + off_span[:, None])
        return resid @ self.weights_
