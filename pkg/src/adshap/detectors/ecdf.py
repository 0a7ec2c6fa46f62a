"""Empirical-CDF tail detectors: ECOD and COPOD."""

import numpy as np
from scipy.stats import skew

from .base import FittedDetector, register, require


class _TailDetector(FittedDetector):
    """Per-feature left/right tail probabilities against the training ECDF.

    A query value is ranked among the training column plus itself, ties
    taking the average rank, so probabilities stay in (0, 1) for any input.
    """

    def _fit(self, X, rng):
        require(X.shape[0] >= 2, f"{self.detector_id}: need at least 2 training rows")
        self.sorted_ = np.sort(X, axis=0)
        with np.errstate(all="ignore"):
            sk = skew(X, axis=0)
        sk = np.nan_to_num(sk)
        sk[np.abs(sk) < 1e-12] = 0.0
        self.skew_sign_ = np.sign(sk)
        return self._decision(X)

    def _tails(self, X):
        n = self.sorted_.shape[0]
        ul = np.empty_like(X)
        ur = np.empty_like(X)
        for j in range(X.shape[1]):
            col = self.sorted_[:, j]
            lt = np.searchsorted(col, X[:, j], side="left")
            le = np.searchsorted(col, X[:, j], side="right")
            half_eq = 0.5 * (le - lt)
            ul[:, j] = -np.log((lt + half_eq + 1.0) / (n + 1.0))
            ur[:, j] = -np.log((n - le + half_eq + 1.0) / (n + 1.0))
        s = self.skew_sign_
        uskew = ul * -np.sign(s - 1) + ur * np.sign(s + 1)
        return ul, ur, uskew


@register("ECOD", {})
class ECOD(_TailDetector):
    def _decision(self, X):
        ul, ur, uskew = self._tails(X)
        return np.maximum(np.maximum(ul, ur), uskew).sum(1)


@register("COPOD", {})
class COPOD(_TailDetector):
    def _decision(self, X):
        ul, ur, uskew = self._tails(X)
        return np.maximum(uskew, 0.5 * (ul + ur)).sum(1)
