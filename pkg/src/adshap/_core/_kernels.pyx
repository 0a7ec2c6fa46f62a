# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: brute-force k-NN queries and isolation-tree descent."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def knn_query(const double[:, ::1] Q, const double[:, ::1] T, Py_ssize_t k, bint exclude_self=False):
    """k smallest Euclidean distances from each row of Q to the rows of T.

    Returns (dist, idx), both (len(Q), k), sorted ascending by distance with
    ties broken towards the smaller train index. With ``exclude_self`` row i
    of Q is taken to be row i of T and is skipped.
    """
    cdef Py_ssize_t nq = Q.shape[0], nt = T.shape[0], d = Q.shape[1]
    cdef Py_ssize_t i, j, f, pos, filled
    cdef double s, diff
    dist_arr = np.empty((nq, k), dtype=np.float64)
    idx_arr = np.empty((nq, k), dtype=np.intp)
    cdef double[:, ::1] dist = dist_arr
    cdef Py_ssize_t[:, ::1] idx = idx_arr

    with nogil:
        for i in range(nq):
            filled = 0
            for j in range(nt):
                if exclude_self and j == i:
                    continue
                s = 0.0
                for f in range(d):
                    diff = Q[i, f] - T[j, f]
                    s = s + diff * diff
                if filled == k and s >= dist[i, k - 1]:
                    continue
                # insertion keeps equal distances in index order
                if filled < k:
                    pos = filled
                    filled = filled + 1
                else:
                    pos = k - 1
                while pos > 0 and dist[i, pos - 1] > s:
                    dist[i, pos] = dist[i, pos - 1]
                    idx[i, pos] = idx[i, pos - 1]
                    pos = pos - 1
                dist[i, pos] = s
                idx[i, pos] = j
            for j in range(k):
                dist[i, j] = sqrt(dist[i, j])
    return dist_arr, idx_arr


def iforest_path_lengths(
    const double[:, ::1] X,
    const Py_ssize_t[::1] feature,
    const double[::1] threshold,
    const Py_ssize_t[::1] left,
    const Py_ssize_t[::1] right,
    const double[::1] leaf_value,
    const Py_ssize_t[::1] roots,
):
    """Mean isolation path length of every row of X over the packed trees.

    Nodes of all trees share flat arrays; ``feature[node] < 0`` marks a leaf
    whose ``leaf_value`` is its depth plus the unbuilt-subtree correction.
    """
    cdef Py_ssize_t n = X.shape[0], n_trees = roots.shape[0]
    cdef Py_ssize_t i, t, node
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        # tree-major order keeps one tree's nodes hot in cache
        for t in range(n_trees):
            for i in range(n):
                node = roots[t]
                while feature[node] >= 0:
                    if X[i, feature[node]] < threshold[node]:
                        node = left[node]
                    else:
                        node = right[node]
                out[i] += leaf_value[node]
        for i in range(n):
            out[i] = out[i] / n_trees
    return out_arr
