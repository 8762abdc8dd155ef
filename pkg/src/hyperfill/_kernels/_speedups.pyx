# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``pure.py`` for the reference semantics."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


cpdef cnp.ndarray[cnp.int64_t, ndim=1] greedy_separated_subset(
        cnp.ndarray[cnp.float64_t, ndim=2] coords,
        cnp.ndarray[cnp.int64_t, ndim=1] candidates,
        double sep,
        bint sup_metric):
    cdef Py_ssize_t m = candidates.shape[0]
    cdef Py_ssize_t dim = coords.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] kept = np.empty((m, dim), dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] chosen = np.empty(m, dtype=np.int64)
    cdef Py_ssize_t count = 0, c, k, d
    cdef cnp.int64_t idx
    cdef double dist, diff, acc
    cdef bint ok
    for c in range(m):
        idx = candidates[c]
        ok = True
        for k in range(count):
            if sup_metric:
                acc = 0.0
                for d in range(dim):
                    diff = coords[idx, d] - kept[k, d]
                    if diff < 0:
                        diff = -diff
                    if diff > acc:
                        acc = diff
                dist = acc
            else:
                acc = 0.0
                for d in range(dim):
                    diff = coords[idx, d] - kept[k, d]
                    acc += diff * diff
                dist = acc ** 0.5
            if dist < sep:
                ok = False
                break
        if ok:
            for d in range(dim):
                kept[count, d] = coords[idx, d]
            chosen[count] = idx
            count += 1
    return chosen[:count].copy()


cpdef cnp.ndarray[cnp.float64_t, ndim=1] pdhg_sweep(
        cnp.ndarray[cnp.float64_t, ndim=1] y,
        cnp.ndarray[cnp.int64_t, ndim=1] gap_ii,
        cnp.ndarray[cnp.int64_t, ndim=1] gap_jj,
        cnp.ndarray[cnp.float64_t, ndim=1] m,
        cnp.ndarray[cnp.float64_t, ndim=1] gbar,
        double sigma,
        cnp.ndarray[cnp.float64_t, ndim=1] rowsum):
    cdef Py_ssize_t n_pairs = y.shape[0]
    cdef Py_ssize_t n = rowsum.shape[0]
    cdef Py_ssize_t k
    cdef cnp.int64_t i, j
    cdef double val
    for k in range(n):
        rowsum[k] = 0.0
    for k in range(n_pairs):
        i = gap_ii[k]
        j = gap_jj[k]
        val = y[k] + sigma * (m[k] - gbar[i] - gbar[j])
        if val < 0.0:
            val = 0.0
        y[k] = val
        rowsum[i] += val
        rowsum[j] += val
    return y


cpdef cnp.ndarray[cnp.float64_t, ndim=1] pair_max_lift(
        cnp.ndarray[cnp.float64_t, ndim=1] g,
        cnp.ndarray[cnp.int64_t, ndim=1] gap_ii,
        cnp.ndarray[cnp.int64_t, ndim=1] gap_jj,
        cnp.ndarray[cnp.float64_t, ndim=1] m):
    cdef Py_ssize_t n_pairs = gap_ii.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lift = np.zeros(g.shape[0], dtype=np.float64)
    cdef Py_ssize_t k
    cdef cnp.int64_t i, j
    cdef double d
    for k in range(n_pairs):
        i = gap_ii[k]
        j = gap_jj[k]
        d = m[k] - g[i] - g[j]
        if d > 0.0:
            if d > lift[i]:
                lift[i] = d
            if d > lift[j]:
                lift[j] = d
    for k in range(g.shape[0]):
        lift[k] *= 0.5
    return lift
