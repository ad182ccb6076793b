# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled nearest-neighbour kernels on integer grid points.

The target set is bucketed into a dense table of cubic cells of side ``c``
(in grid units) covering the bounding box of its occupied cells.  Queries
scan Chebyshev shells of cells outward; a shell ``r`` cell holds no point
closer than ``(r - 1) c + 1``, which gives the exact stopping rule.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef cnp.int64_t i64

BACKEND = "cython"

cdef inline i64 _floordiv(i64 a, i64 b) nogil:
    cdef i64 q = a // b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


cdef inline i64 _scan_cell(const i64[:, ::1] pts, const i64[::1] starts, i64 cell,
                           const i64* q, int d, i64 best) nogil:
    cdef i64 k, j, diff, s
    for k in range(starts[cell], starts[cell + 1]):
        s = 0
        for j in range(d):
            diff = pts[k, j] - q[j]
            s += diff * diff
            if s >= best:
                break
        if s < best:
            best = s
    return best


cdef i64 _ring_search(const i64[:, ::1] pts, const i64[::1] starts,
                      const i64[::1] origin, const i64[::1] dims, i64 c,
                      const i64* q, int d, i64 stop_sq, i64 cutoff_sq,
                      i64* qc, i64* lo, i64* hi, i64* idx) nogil:
    cdef i64 best = 0x7fffffffffffffff
    cdef i64 r, r0 = 0, t, cell, lb, bound, rmax = 0
    cdef int j, axis
    cdef bint on_face, done
    for j in range(d):
        qc[j] = _floordiv(q[j] - origin[j], c)
        t = 0
        if qc[j] < 0:
            t = -qc[j]
        elif qc[j] >= dims[j]:
            t = qc[j] - dims[j] + 1
        if t > r0:
            r0 = t
        t = qc[j] if qc[j] > dims[j] - 1 - qc[j] else dims[j] - 1 - qc[j]
        if t < 0:
            t = -t
        if t > rmax:
            rmax = t
    r = r0
    while r <= rmax:
        if r > 0:
            lb = (r - 1) * c + 1
            if lb * lb > best or lb * lb >= cutoff_sq:
                break
        for j in range(d):
            lo[j] = qc[j] - r
            if lo[j] < 0:
                lo[j] = 0
            hi[j] = qc[j] + r
            if hi[j] > dims[j] - 1:
                hi[j] = dims[j] - 1
            if lo[j] > hi[j]:
                lo[j] = 1
                hi[j] = 0
        done = False
        for j in range(d):
            if lo[j] > hi[j]:
                done = True
        if not done:
            # odometer over the first d-1 axes; the last axis is either the
            # full range (when another axis sits on the shell face) or just
            # the two face coordinates
            for j in range(d - 1):
                idx[j] = lo[j]
            while True:
                on_face = False
                cell = 0
                for j in range(d - 1):
                    if idx[j] == qc[j] - r or idx[j] == qc[j] + r:
                        on_face = True
                    cell = cell * dims[j] + idx[j]
                cell = cell * dims[d - 1]
                if on_face:
                    for t in range(lo[d - 1], hi[d - 1] + 1):
                        best = _scan_cell(pts, starts, cell + t, q, d, best)
                else:
                    t = qc[d - 1] - r
                    if t >= lo[d - 1] and t <= hi[d - 1]:
                        best = _scan_cell(pts, starts, cell + t, q, d, best)
                    t = qc[d - 1] + r
                    if r > 0 and t >= lo[d - 1] and t <= hi[d - 1]:
                        best = _scan_cell(pts, starts, cell + t, q, d, best)
                if best <= stop_sq:
                    return best
                axis = d - 2
                while axis >= 0:
                    idx[axis] += 1
                    if idx[axis] <= hi[axis]:
                        break
                    idx[axis] = lo[axis]
                    axis -= 1
                if axis < 0:
                    break
        bound = r * c
        if best <= bound * bound:
            return best
        r += 1
    return best


def nearest_sq(const i64[:, ::1] queries, const i64[:, ::1] pts, const i64[::1] starts,
               const i64[::1] origin, const i64[::1] dims, i64 c,
               i64 stop_sq=-1, i64 cutoff_sq=0x7fffffffffffffff):
    """Squared distance from each query to the nearest target point.

    With ``stop_sq >= 0`` a query may return early with any value
    ``<= stop_sq``; with ``cutoff_sq`` a query whose true answer is
    ``>= cutoff_sq`` may return any value ``>= cutoff_sq``.
    """
    cdef Py_ssize_t m = queries.shape[0], i
    cdef int d = queries.shape[1]
    out = np.empty(m, dtype=np.int64)
    cdef i64[::1] o = out
    cdef i64* buf = <i64*> malloc(4 * d * sizeof(i64))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                o[i] = _ring_search(pts, starts, origin, dims, c, &queries[i, 0], d,
                                    stop_sq, cutoff_sq, buf, buf + d, buf + 2 * d, buf + 3 * d)
    finally:
        free(buf)
    return out


def directed_max_sq(const i64[:, ::1] queries, const i64[::1] order,
                    const i64[:, ::1] pts, const i64[::1] starts,
                    const i64[::1] origin, const i64[::1] dims, i64 c):
    """Exact ``max_q min_p |q - p|^2`` with early break on the running max."""
    cdef Py_ssize_t m = order.shape[0], i
    cdef int d = queries.shape[1]
    cdef i64 cmax = 0, v
    cdef i64* buf = <i64*> malloc(4 * d * sizeof(i64))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                v = _ring_search(pts, starts, origin, dims, c, &queries[order[i], 0], d,
                                 cmax, 0x7fffffffffffffff, buf, buf + d, buf + 2 * d, buf + 3 * d)
                if v > cmax:
                    cmax = v
    finally:
        free(buf)
    return cmax
