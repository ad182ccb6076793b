"""Pure numpy fallback for the nearest-neighbour kernels.

Same signatures and results as the compiled module.  Targets are bucketed
into cubic cells.  A first pass scans the 3^d neighbouring cells of each
query; queries it cannot settle are grouped by cell, target cells whose
lower bound exceeds the best cell upper bound are pruned, and exact
distances are taken against the survivors.  Work is done in bounded batches.
"""

import numpy as np

BACKEND = "numpy"

_BIG = np.iinfo(np.int64).max
_PAIRS = 1 << 22


def _brute(queries, pts):
    out = np.empty(len(queries), dtype=np.int64)
    step = max(1, _PAIRS // len(pts))
    for s in range(0, len(queries), step):
        diff = queries[s : s + step, None, :] - pts[None, :, :]
        out[s : s + step] = np.einsum("ijk,ijk->ij", diff, diff).min(axis=1)
    return out


def _cell_bounds(qc, tc, c):
    """Squared lower/upper distance bounds between points of cells ``qc`` and ``tc``."""
    delta = np.abs(qc[:, None, :] - tc[None, :, :])
    lo = np.where(delta > 0, (delta - 1) * c + 1, 0)
    hi = (delta + 1) * c - 1
    return (lo * lo).sum(axis=2), (hi * hi).sum(axis=2)


def _neighbourhood_pass(queries, qcell, tcells, first, counts, spts, c):
    """Best distance within the 3^d block of cells around each query.

    A result ``<= c*c`` is exact: every point outside the block is at least
    ``c + 1`` away along some axis.
    """
    m, d = queries.shape
    best = np.full(m, _BIG, dtype=np.int64)
    span = int(max(tcells.max(), qcell.max())) + 3
    weights = span ** np.arange(d - 1, -1, -1, dtype=np.int64)
    tkeys = (tcells + 1) @ weights
    offsets = np.stack(np.meshgrid(*[[-1, 0, 1]] * d, indexing="ij"), -1).reshape(-1, d)
    for off in offsets:
        k = (qcell + off + 1) @ weights
        pos = np.minimum(np.searchsorted(tkeys, k), len(tkeys) - 1)
        hit_ids = np.nonzero(tkeys[pos] == k)[0]
        if hit_ids.size == 0:
            continue
        a_all = first[pos[hit_ids]]
        cnt_all = counts[pos[hit_ids]]
        # bound the number of candidate pairs held at once
        cum = np.cumsum(cnt_all)
        cuts = np.searchsorted(cum, np.arange(_PAIRS, int(cum[-1]), _PAIRS), side="right")
        for sl in np.split(np.arange(len(hit_ids)), np.unique(cuts)):
            if sl.size == 0:
                continue
            a, cnt = a_all[sl], cnt_all[sl]
            rows = np.repeat(hit_ids[sl], cnt)
            cols = np.arange(int(cnt.sum())) + np.repeat(a - np.cumsum(cnt) + cnt, cnt)
            diff = spts[cols] - queries[rows]
            np.minimum.at(best, rows, np.einsum("ij,ij->i", diff, diff))
    return best


def _nearest_exact(queries, pts):
    m = len(queries)
    if m == 0:
        return np.empty(0, dtype=np.int64)
    if len(pts) * m <= _PAIRS:
        return _brute(queries, pts)
    lo = np.minimum(pts.min(axis=0), queries.min(axis=0))
    rel = pts - lo
    # coarsen until the occupied target cells average about eight points
    c = 1
    while len(np.unique(rel // c, axis=0)) > max(1, len(pts) // 8):
        c *= 2
    tkey = rel // c
    order = np.lexsort(tkey.T[::-1])
    spts = pts[order]
    tcells, first, counts = np.unique(tkey[order], axis=0, return_index=True, return_counts=True)
    qcell_all = (queries - lo) // c
    out = _neighbourhood_pass(queries, qcell_all, tcells, first, counts, spts, c)
    rest = np.nonzero(out > c * c)[0]
    if rest.size == 0:
        return out
    qcells, qinv = np.unique(qcell_all[rest], axis=0, return_inverse=True)
    qinv = qinv.reshape(-1)
    by_cell = rest[np.argsort(qinv, kind="stable")]
    qstart = np.searchsorted(np.sort(qinv), np.arange(len(qcells) + 1))
    step = max(1, _PAIRS // len(tcells))
    for s in range(0, len(qcells), step):
        lb, ub = _cell_bounds(qcells[s : s + step], tcells, c)
        keep = lb <= ub.min(axis=1, keepdims=True)
        for i, row in enumerate(keep):
            qi = by_cell[qstart[s + i] : qstart[s + i + 1]]
            tc = np.nonzero(row)[0]
            cols = np.concatenate([np.arange(first[t], first[t] + counts[t]) for t in tc])
            out[qi] = _brute(queries[qi], spts[cols])
    return out


def nearest_sq(queries, pts, starts=None, origin=None, dims=None, c=None,
               stop_sq=-1, cutoff_sq=_BIG):
    """Exact squared nearest distances (``stop_sq``/``cutoff_sq`` are hints)."""
    queries = np.ascontiguousarray(queries, dtype=np.int64)
    pts = np.ascontiguousarray(pts, dtype=np.int64)
    return _nearest_exact(queries, pts)


def directed_max_sq(queries, order, pts, starts=None, origin=None, dims=None, c=None):
    if len(order) == 0:
        return 0
    return int(nearest_sq(np.asarray(queries)[np.asarray(order)], pts).max())
