# cython: language_level=3
"""Compiled hot kernels: LCS dynamic program and clipped n-gram overlap.

Semantics must match ``redsum._pykernels`` exactly; the test suite asserts
bit-identical results between the two backends.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def lcs_length(a, b):
    """Length of the longest common subsequence of two int id arrays."""
    cdef const int[::1] x
    cdef const int[::1] y
    a = np.ascontiguousarray(a, dtype=np.int32)
    b = np.ascontiguousarray(b, dtype=np.int32)
    if a.shape[0] >= b.shape[0]:
        x, y = a, b
    else:
        x, y = b, a
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = y.shape[0]
    if n == 0 or m == 0:
        return 0
    rows_arr = np.zeros(2 * (m + 1), dtype=np.int64)
    cdef long long[::1] rows = rows_arr
    cdef Py_ssize_t i, j, cur, prv
    cdef long long up, left
    cdef int xi
    with nogil:
        for i in range(1, n + 1):
            cur = (i & 1) * (m + 1)
            prv = ((i - 1) & 1) * (m + 1)
            xi = x[i - 1]
            for j in range(1, m + 1):
                if xi == y[j - 1]:
                    rows[cur + j] = rows[prv + j - 1] + 1
                else:
                    up = rows[prv + j]
                    left = rows[cur + j - 1]
                    rows[cur + j] = up if up >= left else left
    return int(rows_arr[(n & 1) * (m + 1) + m])


def ngram_overlap(a, b, int n):
    """Clipped multiset n-gram intersection of two int id arrays.

    Returns ``(overlap, count_a, count_b)`` with window counts per side.
    N-grams are packed into int64 keys (exact for vocabularies < 2^21 when
    n = 3), sorted, and intersected with a run-merging two-pointer walk.
    """
    cdef const int[::1] x = np.ascontiguousarray(a, dtype=np.int32)
    cdef const int[::1] y = np.ascontiguousarray(b, dtype=np.int32)
    cdef Py_ssize_t la = x.shape[0]
    cdef Py_ssize_t lb = y.shape[0]
    cdef Py_ssize_t na = la - n + 1 if la >= n else 0
    cdef Py_ssize_t nb = lb - n + 1 if lb >= n else 0
    if na == 0 or nb == 0:
        return 0, int(na), int(nb)

    cdef long long base = 0
    cdef Py_ssize_t i, k
    for i in range(la):
        if x[i] > base:
            base = x[i]
    for i in range(lb):
        if y[i] > base:
            base = y[i]
    base += 1
    if n > 1 and base > (1 << 21):
        raise ValueError("vocabulary too large for packed n-gram keys")

    ka_arr = np.empty(na, dtype=np.int64)
    kb_arr = np.empty(nb, dtype=np.int64)
    cdef long long[::1] ka = ka_arr
    cdef long long[::1] kb = kb_arr
    cdef long long key
    with nogil:
        for i in range(na):
            key = x[i]
            for k in range(1, n):
                key = key * base + x[i + k]
            ka[i] = key
        for i in range(nb):
            key = y[i]
            for k in range(1, n):
                key = key * base + y[i + k]
            kb[i] = key
    ka_arr.sort()
    kb_arr.sort()

    cdef Py_ssize_t p = 0, q = 0, ra, rb
    cdef long long overlap = 0
    cdef long long va, vb
    with nogil:
        while p < na and q < nb:
            va = ka[p]
            vb = kb[q]
            if va < vb:
                p += 1
            elif vb < va:
                q += 1
            else:
                ra = 1
                while p + ra < na and ka[p + ra] == va:
                    ra += 1
                rb = 1
                while q + rb < nb and kb[q + rb] == vb:
                    rb += 1
                overlap += ra if ra < rb else rb
                p += ra
                q += rb
    return int(overlap), int(na), int(nb)
