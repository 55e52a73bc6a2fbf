"""Pure-Python twin of the compiled kernels in ``_ckernels``.

Both backends expose the same two functions over int32 id arrays; results
must be bit-identical. ``redsum.kernels`` picks one at import time.
"""

from collections import Counter

import numpy as np


def lcs_length(a, b):
    """Length of the longest common subsequence of two int id arrays."""
    a = np.ascontiguousarray(a, dtype=np.int32)
    b = np.ascontiguousarray(b, dtype=np.int32)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return 0
    if m > n:  # keep the row buffers on the shorter side
        a, b, n, m = b, a, m, n
    xs = a.tolist()
    ys = b.tolist()
    prev = [0] * (m + 1)
    curr = [0] * (m + 1)
    for i in range(1, n + 1):
        xi = xs[i - 1]
        for j in range(1, m + 1):
            if xi == ys[j - 1]:
                curr[j] = prev[j - 1] + 1
            else:
                pj = prev[j]
                cj = curr[j - 1]
                curr[j] = pj if pj >= cj else cj
        prev, curr = curr, prev
    return prev[m]


def ngram_overlap(a, b, n):
    """Clipped multiset n-gram intersection of two int id arrays.

    Returns ``(overlap, count_a, count_b)`` where the counts are the number
    of n-gram windows on each side (0 when the side is shorter than n).
    """
    a = np.ascontiguousarray(a, dtype=np.int32).tolist()
    b = np.ascontiguousarray(b, dtype=np.int32).tolist()
    na = max(len(a) - n + 1, 0)
    nb = max(len(b) - n + 1, 0)
    if na == 0 or nb == 0:
        return 0, na, nb
    ca = Counter(tuple(a[i : i + n]) for i in range(na))
    cb = Counter(tuple(b[i : i + n]) for i in range(nb))
    if len(cb) < len(ca):
        ca, cb = cb, ca
    overlap = sum(min(cnt, cb[g]) for g, cnt in ca.items() if g in cb)
    return overlap, na, nb
