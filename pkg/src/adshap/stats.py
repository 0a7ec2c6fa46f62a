"""Mantel permutation test, standardized two-predictor regression, and VIF."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .similarity import DissimilarityMatrix, _row_pearson, pearson


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class MantelResult:
    r_m: float
    p_value: float
    n_permutations: int
    seed: int

    def to_dict(self):
        return {"r_m": self.r_m, "p_value": self.p_value, "n_permutations": self.n_permutations, "seed": self.seed}


def _square(D):
    values = D.values if isinstance(D, DissimilarityMatrix) else np.asarray(D, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise StatsError(f"expected a square matrix, got shape {values.shape}")
    if not np.allclose(values, values.T, atol=1e-9, rtol=0):
        raise StatsError("matrix is not symmetric")
    return values


def _permutations(m, n, seed):
    # one stream per replicate keeps the draw independent of evaluation order
    return np.array([np.random.default_rng([seed, i]).permutation(m) for i in range(n)], dtype=np.intp)


def mantel_test(D1, D2, n_permutations: int = 999, seed: int = 0) -> MantelResult:
    """One-sided (greater) Mantel test on the strict upper triangles.

    Rows and columns of ``D2`` are relabelled jointly; the p-value uses the
    add-one rule ``(1 + #{r_perm >= r}) / (n_permutations + 1)``.
    """
    A, B = _square(D1), _square(D2)
    if A.shape != B.shape:
        raise StatsError(f"matrix sizes differ: {A.shape} vs {B.shape}")
    m = A.shape[0]
    if m < 3:
        raise StatsError(f"Mantel test needs m >= 3, got {m}")
    if n_permutations < 1:
        raise StatsError("n_permutations must be >= 1")
    iu = np.triu_indices(m, k=1)
    x = A[iu]
    r = pearson(x, B[iu])

    perms = _permutations(m, n_permutations, seed)
    permuted = B[perms[:, iu[0]], perms[:, iu[1]]]
    r_perm = _row_pearson(np.broadcast_to(x, permuted.shape), permuted)
    count = int(np.count_nonzero(r_perm >= r))
    return MantelResult(r, (1 + count) / (n_permutations + 1), int(n_permutations), int(seed))


@dataclass(frozen=True)
class MantelTable:
    kinds: tuple[str, ...]
    results: tuple[tuple[MantelResult, ...], ...]

    def r_matrix(self):
        return np.array([[c.r_m for c in row] for row in self.results])

    def p_matrix(self):
        return np.array([[c.p_value for c in row] for row in self.results])

    def get(self, a, b) -> MantelResult:
        return self.results[self.kinds.index(a)][self.kinds.index(b)]

    def to_dict(self):
        out = {}
        for i, a in enumerate(self.kinds):
            for j in range(i + 1, len(self.kinds)):
                out[f"{a}~{self.kinds[j]}"] = self.results[i][j].to_dict()
        return out


def pairwise_matrix_correlations(
    matrices: Sequence[DissimilarityMatrix], n_permutations: int = 999, seed: int = 0
) -> MantelTable:
    """Mantel test for every unordered pair; the diagonal is fixed at r = 1."""
    ids = matrices[0].model_ids
    for M in matrices[1:]:
        if M.model_ids != ids:
            raise StatsError(f"model ordering differs: {M.model_ids} vs {ids}")
    k = len(matrices)
    diag = MantelResult(1.0, 1.0 / (n_permutations + 1), n_permutations, seed)
    cells = [[diag] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            cells[i][j] = cells[j][i] = mantel_test(matrices[i], matrices[j], n_permutations, seed)
    return MantelTable(tuple(M.kind for M in matrices), tuple(tuple(r) for r in cells))


@dataclass(frozen=True)
class RegressionResult:
    weights: dict[str, float]
    intercept: float
    ratio: float | None
    r_squared: float
    target: str = "gain"
    n: int = 0

    def to_dict(self):
        return {
            "weights": dict(self.weights),
            "intercept": self.intercept,
            "ratio": self.ratio,
            "r_squared": self.r_squared,
            "target": self.target,
            "n": self.n,
        }


def _zscore(col):
    sd = col.std()
    if sd == 0:
        raise StatsError("a predictor is constant (collinear with the intercept)")
    return (col - col.mean()) / sd


def standardized_regression(
    y,
    X,
    names: Sequence[str] = ("mean_individual_performance", "diversity"),
    target: str = "gain",
) -> RegressionResult:
    """OLS of ``y`` on z-scored predictors; ``ratio = w_diversity / w_performance``."""
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size or X.shape[1] != len(names):
        raise StatsError(f"predictor matrix shape {X.shape} does not fit {y.size} targets and {len(names)} names")
    if y.size < 3:
        raise StatsError("regression needs at least 3 rows")
    Z = np.column_stack([np.ones(y.size)] + [_zscore(X[:, j]) for j in range(X.shape[1])])
    if np.ptp(y) == 0:
        # nothing to explain; lstsq would hand back rounding noise as weights
        return RegressionResult({n: 0.0 for n in names}, float(y[0]), None, 0.0, target, int(y.size))
    coef, _, rank, _ = np.linalg.lstsq(Z, y, rcond=None)
    if rank < Z.shape[1]:
        raise StatsError("predictors are perfectly collinear")
    resid = y - Z @ coef
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 0.0 if sst == 0 else float(np.clip(1.0 - (resid @ resid) / sst, 0.0, 1.0))
    w = {name: float(c) for name, c in zip(names, coef[1:])}
    perf, div = float(coef[1]), float(coef[-1])
    ratio = div / perf if perf != 0 else None
    return RegressionResult(w, float(coef[0]), ratio, r2, target, int(y.size))


@dataclass(frozen=True)
class VIFResult:
    """Per-predictor VIF; ``None`` where the auxiliary fit is perfect."""

    values: tuple[float | None, ...]
    overflow: tuple[bool, ...] = field(default=())

    def to_dict(self):
        return {"values": list(self.values), "overflow": list(self.overflow)}


def vif(X) -> VIFResult:
    """``1 / (1 - R_i^2)`` from regressing each predictor on the others."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise StatsError("VIF needs at least two predictor columns")
    n, p = X.shape
    if n < p + 1:
        raise StatsError(f"VIF needs more than {p} rows, got {n}")
    values, flags = [], []
    for i in range(p):
        target = X[:, i]
        others = np.column_stack([np.ones(n), np.delete(X, i, axis=1)])
        coef, *_ = np.linalg.lstsq(others, target, rcond=None)
        resid = target - others @ coef
        sst = float(((target - target.mean()) ** 2).sum())
        r2 = 1.0 if sst == 0 else 1.0 - float(resid @ resid) / sst
        if 1.0 - r2 <= 1e-12:
            values.append(None)
            flags.append(True)
        else:
            values.append(1.0 / (1.0 - max(r2, 0.0)))
            flags.append(False)
    return VIFResult(tuple(values), tuple(flags))
