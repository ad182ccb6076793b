"""Backend selection and grid indexing for nearest-neighbour queries.

The compiled extension is used when it imports; set ``SUBSHIFT_IFS_PURE=1``
to force the numpy fallback.  Both backends work on int64 grid indices, so
their squared distances are exact integers and agree bit for bit.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_backend = _kernels_py
if os.environ.get("SUBSHIFT_IFS_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]

        _backend = _compiled
    except ImportError:
        pass

BACKEND: str = _backend.BACKEND

_MAX_TABLE = 1 << 22


def use_backend(name: str) -> str:
    """Switch to ``"cython"`` or ``"numpy"``; returns the previous name."""
    global _backend, BACKEND
    prev = BACKEND
    if name == "numpy":
        _backend = _kernels_py
    elif name == "cython":
        from . import _kernels as _compiled  # type: ignore[attr-defined]

        _backend = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = _backend.BACKEND
    return prev


def available_backends() -> list[str]:
    out = ["numpy"]
    try:
        from . import _kernels  # type: ignore[attr-defined]  # noqa: F401

        out.insert(0, "cython")
    except ImportError:
        pass
    return out


class GridIndex:
    """Target points bucketed into a dense CSR table of cubic cells."""

    def __init__(self, pts: np.ndarray):
        pts = np.ascontiguousarray(pts, dtype=np.int64)
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("grid index needs a nonempty (m, d) array")
        m, d = pts.shape
        lo = pts.min(axis=0)
        rel = pts - lo
        span = rel.max(axis=0) + 1
        target = max(1, m // 8)
        c = 1
        while True:
            dims = (span + c - 1) // c
            total = int(np.prod(dims.astype(float)))
            if total <= _MAX_TABLE:
                cells = rel // c
                key = np.ravel_multi_index(cells.T, dims)
                occupied = np.unique(key).size
                if occupied <= target or c >= int(span.max()):
                    break
            c *= 2
        order = np.argsort(key, kind="stable")
        self.pts = np.ascontiguousarray(pts[order])
        counts = np.bincount(key, minlength=total)
        self.starts = np.zeros(total + 1, dtype=np.int64)
        np.cumsum(counts, out=self.starts[1:])
        self.origin = np.ascontiguousarray(lo, dtype=np.int64)
        self.dims = np.ascontiguousarray(dims, dtype=np.int64)
        self.c = int(c)

    def _args(self):
        return self.pts, self.starts, self.origin, self.dims, self.c

    def nearest_sq(self, queries, stop_sq: int = -1, cutoff_sq: int | None = None) -> np.ndarray:
        q = np.ascontiguousarray(queries, dtype=np.int64)
        if cutoff_sq is None:
            cutoff_sq = np.iinfo(np.int64).max
        return _backend.nearest_sq(q, *self._args(), int(stop_sq), int(cutoff_sq))

    def directed_max_sq(self, queries) -> int:
        q = np.ascontiguousarray(queries, dtype=np.int64)
        # a fixed pseudo-random order makes the early break effective on
        # clustered data without losing determinism
        order = np.random.default_rng(12345).permutation(len(q)).astype(np.int64)
        return int(_backend.directed_max_sq(q, order, *self._args()))
