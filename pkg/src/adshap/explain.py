"""Model-agnostic Kernel SHAP over a k-means summarized background.

The value of a coalition ``S`` for instance ``x`` is the background-weighted
mean score of hybrid points that take features in ``S`` from ``x`` and the
rest from each centroid. ``kernel_shap`` estimates attributions by weighted
least squares over coalitions; ``exact_shapley`` enumerates the Shapley sum
directly and serves as its oracle.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import comb

from ._kmeans import kmeans
from .data import Dataset
from .io import read_matrix_csv, write_matrix_csv

EXACT_MAX_FEATURES = 14
RIDGE = 1e-10


class ExplainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Background:
    centroids: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.centroids, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if C.shape[0] < 1 or w.shape != (C.shape[0],):
            raise ExplainError("background needs k >= 1 centroids with one weight each")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ExplainError("background weights must be positive and sum to 1")
        C.setflags(write=False)
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "centroids", C)
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def base_value(self, f) -> float:
        """Expected score of ``f`` over the weighted centroids."""
        return float(np.asarray(f(self.centroids), dtype=float) @ self.weights)


@dataclass(frozen=True, eq=False)
class ShapMatrix:
    values: np.ndarray
    base_value: float
    detector_id: str = ""
    dataset_id: str = ""
    feature_names: tuple[str, ...] = ()
    seed: int | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise ExplainError(f"SHAP matrix must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ExplainError("SHAP matrix has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(v.shape[1]))
        object.__setattr__(self, "feature_names", names)

    @property
    def shape(self):
        return self.values.shape

    def save(self, path) -> None:
        """Write ``<path>`` (CSV, header = feature names) and ``<path>.json``."""
        path = Path(path)
        write_matrix_csv(path, self.values, self.feature_names)
        meta = {
            "detector_id": self.detector_id,
            "dataset_id": self.dataset_id,
            "base_value": self.base_value,
            "seed": self.seed,
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> ShapMatrix:
        path = Path(path)
        names, values = read_matrix_csv(path)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        return cls(values, meta["base_value"], meta["detector_id"], meta["dataset_id"], tuple(names), meta["seed"])


def summarize_background(train: Dataset | np.ndarray, k: int = 50, seed: int = 0) -> Background:
    """k-means centroids of the training rows weighted by cluster share."""
    X = train.features if isinstance(train, Dataset) else np.asarray(train, dtype=float)
    res = kmeans(X, k, seed=seed)
    sizes = np.bincount(res.labels, minlength=res.centers.shape[0])
    keep = sizes > 0
    return Background(res.centers[keep], sizes[keep] / sizes.sum())


def _coalition_values(f, x, bg: Background, masks: np.ndarray) -> np.ndarray:
    """v(S) for each boolean row of ``masks`` (shape (s, d))."""
    C = bg.centroids
    out = np.empty(masks.shape[0])
    # bounded batches keep the hybrid matrix near 4M cells
    step = max(1, (1 << 22) // max(1, C.shape[0] * C.shape[1]))
    for start in range(0, masks.shape[0], step):
        m = masks[start : start + step]
        hybrid = np.where(m[:, None, :], x[None, None, :], C[None, :, :])
        vals = np.asarray(f(hybrid.reshape(-1, C.shape[1])), dtype=float)
        out[start : start + step] = vals.reshape(m.shape[0], C.shape[0]) @ bg.weights
    return out


def _kernel_weight(M, s):
    return (M - 1) / (comb(M, s, exact=False) * s * (M - s))


def _all_coalitions(M):
    masks, weights = [], []
    for s in range(1, M):
        w = _kernel_weight(M, s)
        for combo in itertools.combinations(range(M), s):
            m = np.zeros(M, dtype=bool)
            m[list(combo)] = True
            masks.append(m)
            weights.append(w)
    return np.array(masks), np.array(weights)


def _sampled_coalitions(M, budget, rng):
    """Complete the smallest/largest coalition sizes while the budget allows
    and draw the rest from the Shapley kernel, pairing each draw with its
    complement."""
    n_sizes = int(math.ceil((M - 1) / 2.0))
    n_paired = int(math.floor((M - 1) / 2.0))
    weight_vector = np.array([(M - 1.0) / (s * (M - s)) for s in range(1, n_sizes + 1)])
    weight_vector[:n_paired] *= 2
    weight_vector /= weight_vector.sum()

    masks, weights = [], []
    n_full = 0
    left = budget
    remaining = weight_vector.copy()
    for s in range(1, n_sizes + 1):
        paired = s <= n_paired
        n_subsets = comb(M, s, exact=True) * (2 if paired else 1)
        if left * remaining[s - 1] / n_subsets < 1.0 - 1e-8:
            break
        n_full += 1
        left -= n_subsets
        if remaining[s - 1] < 1.0:
            remaining /= 1.0 - remaining[s - 1]
        w = weight_vector[s - 1] / comb(M, s, exact=True)
        if paired:
            w /= 2.0
        for combo in itertools.combinations(range(M), s):
            m = np.zeros(M, dtype=bool)
            m[list(combo)] = True
            masks.append(m)
            weights.append(w)
            if paired:
                masks.append(~m)
                weights.append(w)

    n_fixed = len(masks)
    if n_full < n_sizes and left > 0:
        probs = weight_vector.copy()
        probs[:n_paired] /= 2.0
        probs = probs[n_full:]
        probs /= probs.sum()
        draws = rng.choice(len(probs), size=4 * left, p=probs)
        seen: dict[bytes, int] = {}

        def add(m):
            key = np.packbits(m).tobytes()
            if key in seen:
                weights[seen[key]] += 1.0
                return False
            seen[key] = len(masks)
            masks.append(m)
            weights.append(1.0)
            return True

        for ind in draws:
            if left <= 0:
                break
            s = int(ind) + n_full + 1
            m = np.zeros(M, dtype=bool)
            m[rng.permutation(M)[:s]] = True
            if add(m):
                left -= 1
            if left > 0 and s <= n_paired:
                if add(~m):
                    left -= 1
        sampled = np.asarray(weights[n_fixed:])
        mass_left = weight_vector[n_full:].sum()
        weights[n_fixed:] = list(sampled * (mass_left / sampled.sum()))
    return np.array(masks), np.array(weights)


def _solve_constrained(Z, y, w, total):
    """min sum w (y - Z phi)^2 subject to sum phi = total.

    The last coefficient is eliminated by substitution and the reduced
    normal equations get a small relative ridge.
    """
    last = Z[:, -1:]
    A = Z[:, :-1] - last
    b = y - last[:, 0] * total
    AW = A.T * w
    G = AW @ A
    G[np.diag_indices_from(G)] += RIDGE * max(np.trace(G) / G.shape[0], 1.0)
    head = np.linalg.solve(G, AW @ b)
    return np.append(head, total - head.sum())


def default_budget(d: int) -> int:
    return 2 * d + 2048


def kernel_shap(f, x, bg: Background, n_coalitions: int | None = None, seed=0):
    """Kernel SHAP attributions for one instance.

    Returns ``(phi, base_value)`` with ``phi.sum() + base_value == f(x)`` up
    to round-off. Features whose value matches every centroid get exactly
    zero. All proper coalitions are enumerated when ``2**d - 2`` fits the
    budget; otherwise the budget is spent as in the reference Kernel SHAP.
    """
    x = np.asarray(x, dtype=float).ravel()
    d = x.shape[0]
    if bg.centroids.shape[1] != d:
        raise ExplainError(f"instance has {d} features, background has {bg.centroids.shape[1]}")
    budget = default_budget(d) if n_coalitions is None else int(n_coalitions)
    if budget < 2:
        raise ExplainError(f"n_coalitions must be >= 2, got {budget}")

    fx = float(np.asarray(f(x[None, :]), dtype=float)[0])
    base = bg.base_value(f)
    phi = np.zeros(d)
    varying = np.flatnonzero(np.any(bg.centroids != x, axis=0))
    M = varying.size
    if M == 0:
        return phi, base
    if M == 1:
        phi[varying] = fx - base
        return phi, base

    if M >= 63 or (1 << M) - 2 > budget:
        if budget < M + 1:
            raise ExplainError(f"n_coalitions={budget} cannot determine {M} attributions")
        sub, w = _sampled_coalitions(M, budget, np.random.default_rng(seed))
    else:
        sub, w = _all_coalitions(M)

    masks = np.zeros((sub.shape[0], d), dtype=bool)
    # non-varying features equal every centroid, so their side is irrelevant
    masks[:, varying] = sub
    y = _coalition_values(f, x, bg, masks) - base
    phi[varying] = _solve_constrained(sub.astype(float), y, w, fx - base)
    return phi, base


def exact_shapley(f, x, bg: Background) -> np.ndarray:
    """Shapley values by enumerating all ``2**d`` coalitions."""
    x = np.asarray(x, dtype=float).ravel()
    d = x.shape[0]
    if d > EXACT_MAX_FEATURES:
        raise ExplainError(f"exact enumeration limited to d <= {EXACT_MAX_FEATURES}, got {d}")
    codes = np.arange(1 << d)
    bits = ((codes[:, None] >> np.arange(d)) & 1).astype(bool)
    v = _coalition_values(f, x, bg, bits)
    size = bits.sum(1)
    fact = [math.factorial(i) for i in range(d + 1)]
    phi = np.empty(d)
    for j in range(d):
        without = codes[~bits[:, j]]
        s = size[without]
        w = np.array([fact[t] * fact[d - t - 1] for t in range(d)], dtype=float)[s] / fact[d]
        phi[j] = np.sum(w * (v[without | (1 << j)] - v[without]))
    return phi


def explain_dataset(det, X: Dataset, bg: Background, n_coalitions: int | None = None, seed: int = 0) -> ShapMatrix:
    """Row ``k`` uses the RNG stream ``(seed, k)``, so rows are order-free."""
    rows = np.zeros((X.n, X.d))
    base = bg.base_value(det)
    for k in range(X.n):
        rows[k], _ = kernel_shap(det, X.features[k], bg, n_coalitions, seed=(seed, k))
    return ShapMatrix(
        rows,
        base,
        getattr(det, "detector_id", ""),
        X.name,
        X.feature_names,
        seed,
    )
