"""numpy implementations of the compiled kernels in ``_ckernels.pyx``.

Both backends evaluate the same floating point expressions in the same
order, so their outputs are bit-identical.
"""

from __future__ import annotations

import numpy as np


def best_split(X: np.ndarray, y: np.ndarray, idx: np.ndarray):
    """Return (feature, threshold, gain) of the best Gini split over ``idx``.

    Candidate thresholds are midpoints between consecutive distinct values;
    a row goes left when ``x <= threshold``. The split maximizing
    ``(al^2 + bl^2)/nl + (ar^2 + br^2)/nr`` wins (equivalently, minimizing
    the weighted child Gini); among candidates within ``1e-12 * n`` of the
    best, the lowest feature index and then the lowest threshold is taken.
    ``gain`` is the decrease of count-weighted Gini impurity.
    """
    n = idx.shape[0]
    if n < 2:
        return -1, float("nan"), 0.0
    yy = y[idx]
    total1 = int(yy.sum())
    best_p = -1.0
    cand_p, cand_t, cand_f = [], [], []
    for f in range(X.shape[1]):
        x = X[idx, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        cum1 = np.cumsum(yy[order])[:-1]
        i = np.flatnonzero(xs[1:] != xs[:-1]) + 1
        if i.size == 0:
            continue
        nl = i.astype(np.float64)
        nr = (n - i).astype(np.float64)
        bl = cum1[i - 1].astype(np.float64)
        al = nl - bl
        br = (total1 - cum1[i - 1]).astype(np.float64)
        ar = nr - br
        p = (al * al + bl * bl) / nl + (ar * ar + br * br) / nr
        lo, hi = xs[i - 1], xs[i]
        mid = (lo + hi) / 2.0
        mid = np.where(mid >= hi, lo, mid)
        cand_p.append(p)
        cand_t.append(mid)
        cand_f.append(np.full(i.size, f))
        best_p = max(best_p, float(p.max()))
    if not cand_p:
        return -1, float("nan"), 0.0
    p = np.concatenate(cand_p)
    k = int(np.flatnonzero(p >= best_p - 1e-12 * n)[0])
    parent = (float(n - total1) * float(n - total1) + float(total1) * float(total1)) / float(n)
    return int(np.concatenate(cand_f)[k]), float(np.concatenate(cand_t)[k]), float(p[k] - parent)


def apply_tree(X, feature, threshold, left, right) -> np.ndarray:
    """Leaf node index reached by every row of ``X``."""
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = np.flatnonzero(left[node] >= 0)
    while active.size:
        nd = node[active]
        go_left = X[active, feature[nd]] <= threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
        active = active[left[node[active]] >= 0]
    return node


def kneighbors(train: np.ndarray, query: np.ndarray, k: int, chunk: int = 256) -> np.ndarray:
    """Indices of the ``k`` nearest training rows per query row.

    Ordered by squared Euclidean distance, ties by lower training index.
    """
    n, d = train.shape
    if k < 1 or k > n:
        raise ValueError("k must be in [1, n_train]")
    out = np.empty((query.shape[0], k), dtype=np.int64)
    for start in range(0, query.shape[0], chunk):
        q = query[start:start + chunk]
        dist = np.zeros((q.shape[0], n))
        for f in range(d):
            diff = q[:, f, None] - train[None, :, f]
            dist += diff * diff
        kth = np.partition(dist, k - 1, axis=1)[:, k - 1]
        for r in range(q.shape[0]):
            row = dist[r]
            cand = np.flatnonzero(row <= kth[r])
            cand = cand[np.argsort(row[cand], kind="stable")]
            out[start + r] = cand[:k]
    return out
