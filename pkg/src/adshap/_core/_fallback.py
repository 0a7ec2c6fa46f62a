"""NumPy implementations of the compiled kernels, same signatures and tie rules."""

import numpy as np

_CHUNK_ELEMS = 1 << 22


def knn_query(Q, T, k, exclude_self=False):
    Q = np.ascontiguousarray(Q, dtype=float)
    T = np.ascontiguousarray(T, dtype=float)
    nq, nt = Q.shape[0], T.shape[0]
    dist = np.empty((nq, k))
    idx = np.empty((nq, k), dtype=np.intp)
    step = max(1, _CHUNK_ELEMS // max(1, nt * Q.shape[1]))
    for start in range(0, nq, step):
        stop = min(nq, start + step)
        diff = Q[start:stop, None, :] - T[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        if exclude_self:
            rows = np.arange(start, stop)
            sq[rows - start, rows] = np.inf
        # stable sort keeps equal distances in train-index order
        order = np.argsort(sq, axis=1, kind="stable")[:, :k]
        idx[start:stop] = order
        dist[start:stop] = np.sqrt(np.take_along_axis(sq, order, axis=1))
    return dist, idx


def iforest_path_lengths(X, feature, threshold, left, right, leaf_value, roots):
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    rows = np.arange(n)
    acc = np.zeros(n)
    for root in roots:
        node = np.full(n, root, dtype=np.intp)
        active = feature[node] >= 0
        while active.any():
            a = node[active]
            f = feature[a]
            go_left = X[rows[active], f] < threshold[a]
            node[active] = np.where(go_left, left[a], right[a])
            active = feature[node] >= 0
        acc += leaf_value[node]
    return acc / len(roots)
