"""Lloyd's k-means with k-means++ seeding and seeded restarts."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float


def _sq_dists(X, C):
    # (n, k) squared Euclidean distances, clipped against cancellation
    d2 = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d2, 0.0)


def _plusplus(X, k, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = ((X - X[chosen[0]]) ** 2).sum(1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            # all remaining mass is on duplicates of chosen centers
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        closest = np.minimum(closest, ((X - X[nxt]) ** 2).sum(1))
    return X[chosen].copy()


def _lloyd(X, centers, max_iter):
    labels = None
    for _ in range(max_iter):
        d2 = _sq_dists(X, centers)
        new = d2.argmin(1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(centers.shape[0]):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(0)
            else:
                # reseed an empty cluster at the worst-served point
                far = int(d2[np.arange(len(X)), labels].argmax())
                centers[c] = X[far]
    d2 = _sq_dists(X, centers)
    labels = d2.argmin(1)
    inertia = float(d2[np.arange(len(X)), labels].sum())
    return KMeansResult(centers, labels, inertia)


def kmeans(X, k, seed=0, n_init=10, max_iter=300) -> KMeansResult:
    """Best-of-``n_init`` Lloyd run; ``k`` is clamped to the row count."""
    X = np.asarray(X, dtype=float)
    k = max(1, min(int(k), X.shape[0]))
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        res = _lloyd(X, _plusplus(X, k, rng), max_iter)
        if best is None or res.inertia < best.inertia:
            best = res
    return best


def assign(X, centers):
    return _sq_dists(np.asarray(X, dtype=float), centers).argmin(1)
