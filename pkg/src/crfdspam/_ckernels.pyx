# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for tree split search, tree traversal and k-NN.

Semantics match ``_pykernels`` exactly; see that module for the contracts.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef struct Pair:
    double v
    cnp.int64_t y


cdef inline void _swap(Pair* a, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef Pair t = a[i]
    a[i] = a[j]
    a[j] = t


cdef void _sort_pairs(Pair* a, Py_ssize_t n) noexcept nogil:
    """In-place ascending sort on ``v``; order among equal values is irrelevant."""
    cdef Py_ssize_t lo, hi, i, j, mid
    cdef double pivot
    cdef Pair key
    while n > 16:
        mid = n // 2
        # median of three moved to a[0]
        if a[mid].v < a[0].v:
            _swap(a, mid, 0)
        if a[n - 1].v < a[0].v:
            _swap(a, n - 1, 0)
        if a[n - 1].v < a[mid].v:
            _swap(a, n - 1, mid)
        _swap(a, 0, mid)
        pivot = a[0].v
        i = 0
        j = n
        while True:
            i += 1
            while i < n and a[i].v < pivot:
                i += 1
            j -= 1
            while a[j].v > pivot:
                j -= 1
            if i >= j:
                break
            _swap(a, i, j)
        _swap(a, 0, j)
        # recurse into the smaller side, loop on the larger
        if j < n - j - 1:
            _sort_pairs(a, j)
            a = a + j + 1
            n = n - j - 1
        else:
            _sort_pairs(a + j + 1, n - j - 1)
            n = j
    for i in range(1, n):
        key = a[i]
        j = i - 1
        while j >= 0 and a[j].v > key.v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = key


def best_split(const double[:, ::1] X, const cnp.int64_t[::1] y, const cnp.int64_t[::1] idx):
    """Return (feature, threshold, gain) of the best Gini split over ``idx``.

    ``gain`` is the decrease of count-weighted Gini impurity. feature is -1
    when no split exists (all values tied on every feature).
    """
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t f, i
    cdef cnp.int64_t total1 = 0
    cdef double nl, nr, al, bl, ar, br, p, mid
    cdef double best_p = -1.0
    cdef double tol = 1e-12 * n
    cdef Py_ssize_t n_cand = 0
    cdef Pair* buf
    cdef double* cand_p
    cdef double* cand_t
    cdef Py_ssize_t* cand_f
    cdef cnp.int64_t cum1
    cdef Py_ssize_t best_k = -1
    cdef double parent

    if n < 2:
        return -1, float("nan"), 0.0

    buf = <Pair*>malloc(n * sizeof(Pair))
    cand_p = <double*>malloc(d * (n - 1) * sizeof(double))
    cand_t = <double*>malloc(d * (n - 1) * sizeof(double))
    cand_f = <Py_ssize_t*>malloc(d * (n - 1) * sizeof(Py_ssize_t))
    if buf == NULL or cand_p == NULL or cand_t == NULL or cand_f == NULL:
        free(buf); free(cand_p); free(cand_t); free(cand_f)
        raise MemoryError()

    with nogil:
        for i in range(n):
            total1 += y[idx[i]]
        for f in range(d):
            for i in range(n):
                buf[i].v = X[idx[i], f]
                buf[i].y = y[idx[i]]
            _sort_pairs(buf, n)
            cum1 = 0
            for i in range(1, n):
                cum1 += buf[i - 1].y
                if buf[i].v == buf[i - 1].v:
                    continue
                nl = <double>i
                nr = <double>(n - i)
                bl = <double>cum1
                al = nl - bl
                br = <double>(total1 - cum1)
                ar = nr - br
                p = (al * al + bl * bl) / nl + (ar * ar + br * br) / nr
                mid = (buf[i - 1].v + buf[i].v) / 2.0
                if mid >= buf[i].v:
                    mid = buf[i - 1].v
                cand_p[n_cand] = p
                cand_t[n_cand] = mid
                cand_f[n_cand] = f
                n_cand += 1
                if p > best_p:
                    best_p = p
        for i in range(n_cand):
            if cand_p[i] >= best_p - tol:
                best_k = i
                break

    if best_k < 0:
        free(buf); free(cand_p); free(cand_t); free(cand_f)
        return -1, float("nan"), 0.0
    parent = (<double>(n - total1) * <double>(n - total1) + <double>total1 * <double>total1) / <double>n
    result = (int(cand_f[best_k]), float(cand_t[best_k]), float(cand_p[best_k] - parent))
    free(buf); free(cand_p); free(cand_t); free(cand_f)
    return result


def apply_tree(const double[:, ::1] X, const cnp.int64_t[::1] feature, const double[::1] threshold,
               const cnp.int64_t[::1] left, const cnp.int64_t[::1] right):
    """Leaf node index reached by every row of ``X``."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i
    cdef cnp.int64_t node
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    with nogil:
        for i in range(n):
            node = 0
            while left[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            o[i] = node
    return out


def kneighbors(const double[:, ::1] train, const double[:, ::1] query, Py_ssize_t k):
    """Indices of the ``k`` nearest training rows per query row.

    Ordered by squared Euclidean distance, ties by lower training index.
    """
    cdef Py_ssize_t n = train.shape[0]
    cdef Py_ssize_t m = query.shape[0]
    cdef Py_ssize_t d = train.shape[1]
    cdef Py_ssize_t q, j, f, p, filled
    cdef double acc, diff
    if k < 1 or k > n:
        raise ValueError("k must be in [1, n_train]")
    out = np.empty((m, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    cdef double* bd = <double*>malloc(k * sizeof(double))
    if bd == NULL:
        raise MemoryError()
    with nogil:
        for q in range(m):
            filled = 0
            for j in range(n):
                acc = 0.0
                for f in range(d):
                    diff = query[q, f] - train[j, f]
                    acc = acc + diff * diff
                if filled == k and acc >= bd[k - 1]:
                    continue
                # insertion point: after every stored entry with distance <= acc
                p = filled if filled < k else k - 1
                while p > 0 and bd[p - 1] > acc:
                    if p < k:
                        bd[p] = bd[p - 1]
                        o[q, p] = o[q, p - 1]
                    p -= 1
                bd[p] = acc
                o[q, p] = j
                if filled < k:
                    filled += 1
    free(bd)
    return out
