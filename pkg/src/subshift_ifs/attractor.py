"""Grid point clouds, the Hausdorff metric and constrained Hutchinson images.

Compact sets are stored as finite clouds of points snapped to the grid
``eps * Z^d``.  The generalized Hutchinson image ``H^n(A) = U_{u in L_n} f_u(A)``
is never built word by word: the clouds are carried per vertex of a sofic
presentation and pushed along its edges one level at a time.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernels import GridIndex
from .maps import Box, ContractionMap, IfsSystem, compose_word
from .symbolic import SoficPresentation, enumerate_language

__all__ = [
    "ConvergenceConfigError",
    "PointCloud",
    "LevelState",
    "AttractorReport",
    "DefectRow",
    "snap",
    "hausdorff_distance",
    "directed_excess",
    "hutchinson_level",
    "hutchinson_power",
    "naive_hutchinson",
    "seed_state",
    "box_grid",
    "compute_attractor",
    "self_similarity_defect",
    "defect_breakdown",
    "self_similarity_scan",
]

log = logging.getLogger(__name__)

SEED_CAP = 10**6


class ConvergenceConfigError(ValueError):
    """Tolerance finer than the grid can resolve."""


def _snap_keys(points: np.ndarray, eps: float) -> np.ndarray:
    keys = np.rint(np.asarray(points, dtype=float) / eps)
    if not np.all(np.isfinite(keys)):
        raise ValueError("non-finite coordinates")
    return keys.astype(np.int64)


def _unique_rows(keys: np.ndarray) -> np.ndarray:
    if len(keys) <= 1:
        return np.ascontiguousarray(keys)
    return np.ascontiguousarray(np.unique(keys, axis=0))


class PointCloud:
    """Finite set of points on the grid ``eps * Z^d``, rows in lexicographic order.

    The constructor takes integer grid keys; use :func:`snap` for coordinates.
    """

    __slots__ = ("keys", "eps", "_index")

    def __init__(self, keys: np.ndarray, eps: float, _sorted: bool = False):
        keys = np.asarray(keys)
        if keys.size and keys.dtype.kind not in "iu":
            raise TypeError("PointCloud takes integer grid keys; use snap() for coordinates")
        keys = keys.astype(np.int64, copy=False)
        if keys.ndim == 1:
            keys = keys.reshape(-1, 1)
        if len(keys) == 0:
            raise ValueError("point cloud must be nonempty")
        if not eps > 0:
            raise ValueError("grid size must be positive")
        self.keys = keys if _sorted else _unique_rows(keys)
        self.keys.flags.writeable = False
        self.eps = float(eps)
        self._index: GridIndex | None = None

    @property
    def dim(self) -> int:
        return self.keys.shape[1]

    @property
    def points(self) -> np.ndarray:
        return self.keys * self.eps

    def __len__(self) -> int:
        return len(self.keys)

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self.eps == other.eps and np.array_equal(self.keys, other.keys)

    def __hash__(self):
        return hash((self.eps, self.keys.tobytes()))

    def __repr__(self):
        return f"PointCloud(n={len(self)}, dim={self.dim}, eps={self.eps:g})"

    @property
    def index(self) -> GridIndex:
        if self._index is None:
            self._index = GridIndex(self.keys)
        return self._index

    def union(self, *others: "PointCloud") -> "PointCloud":
        for o in others:
            _check_compatible(self, o)
        return PointCloud(np.concatenate([self.keys] + [o.keys for o in others]), self.eps)

    def image(self, f: ContractionMap) -> "PointCloud":
        return PointCloud(_snap_keys(f.eval(self.points), self.eps), self.eps)

    def diameter_bound(self) -> float:
        """Diagonal of the bounding box (an upper bound on the diameter)."""
        span = (self.keys.max(axis=0) - self.keys.min(axis=0)) * self.eps
        return float(np.linalg.norm(span))

    def distance_to(self, points) -> np.ndarray:
        """Distance from arbitrary points to the cloud.

        Queries are snapped first, so the result is exact up to ``eps*sqrt(d)/2``.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            pts = pts.reshape(-1, self.dim)
        q = _snap_keys(pts, self.eps)
        return np.sqrt(self.index.nearest_sq(q).astype(float)) * self.eps

    def within(self, other: "PointCloud", radius: float) -> np.ndarray:
        """Mask of points of ``self`` within ``radius`` of ``other``."""
        _check_compatible(self, other)
        r_sq = int(math.floor((radius / self.eps) ** 2 + 1e-9))
        d = other.index.nearest_sq(self.keys, stop_sq=r_sq, cutoff_sq=r_sq + 1)
        return d <= r_sq

    def subset(self, mask: np.ndarray) -> "PointCloud | None":
        keys = self.keys[np.asarray(mask, dtype=bool)]
        if len(keys) == 0:
            return None
        return PointCloud(keys, self.eps, _sorted=True)


def snap(points, eps: float) -> PointCloud:
    """Round each coordinate to the nearest multiple of ``eps`` and merge duplicates."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ValueError("cannot snap an empty point set")
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    return PointCloud(_snap_keys(pts, eps), eps)


def _check_compatible(a: PointCloud, b: PointCloud):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.eps != b.eps:
        raise ValueError(f"clouds on different grids: eps {a.eps} vs {b.eps}")


def directed_excess(a: PointCloud, b: PointCloud) -> float:
    """``sup_{x in a} dist(x, b)``."""
    _check_compatible(a, b)
    return math.sqrt(b.index.directed_max_sq(a.keys)) * a.eps


def hausdorff_distance(a: PointCloud, b: PointCloud) -> float:
    _check_compatible(a, b)
    if a is b or (len(a) == len(b) and np.array_equal(a.keys, b.keys)):
        return 0.0
    sq = max(b.index.directed_max_sq(a.keys), a.index.directed_max_sq(b.keys))
    return math.sqrt(sq) * a.eps


# ---------------------------------------------------------------------------
# Level DP


@dataclass(frozen=True)
class LevelState:
    """Per-vertex clouds at one level (``None`` for an empty vertex)."""

    clouds: tuple
    eps: float

    def union(self) -> PointCloud:
        parts = [c.keys for c in self.clouds if c is not None]
        if not parts:
            raise ValueError("every vertex cloud is empty")
        if len(parts) == 1:
            return [c for c in self.clouds if c is not None][0]
        return PointCloud(np.concatenate(parts), self.eps)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(0 if c is None else len(c) for c in self.clouds)


def seed_state(pres: SoficPresentation, cloud: PointCloud) -> LevelState:
    """Level 0: ``cloud`` on every initial vertex."""
    return LevelState(
        tuple(cloud if v in pres.initial else None for v in range(pres.num_vertices)),
        cloud.eps,
    )


def _image_keys(f: ContractionMap, keys: np.ndarray, eps: float) -> np.ndarray:
    return _snap_keys((keys * eps) @ f.matrix.T + f.offset, eps)


def hutchinson_level(
    family: Sequence[ContractionMap],
    pres: SoficPresentation,
    state: LevelState,
    threads: int = 1,
) -> LevelState:
    """One DP step: ``C'_q = snap(U_{p -a-> q} f_a(C_p))``."""
    eps = state.eps
    jobs = [
        (q, p, a)
        for p, q, a in pres.edges
        if state.clouds[p] is not None
    ]

    def run(job):
        q, p, a = job
        return _image_keys(family[a - 1], state.clouds[p].keys, eps)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            images = list(pool.map(run, jobs))
    else:
        images = [run(j) for j in jobs]
    per_vertex: list[list[np.ndarray]] = [[] for _ in range(pres.num_vertices)]
    # jobs are in edge order, so the merge is independent of scheduling
    for (q, _, _), keys in zip(jobs, images):
        per_vertex[q].append(keys)
    clouds = tuple(
        PointCloud(np.concatenate(parts), eps) if parts else None for parts in per_vertex
    )
    if all(c is None for c in clouds):
        raise ValueError("presentation produced an empty level")
    return LevelState(clouds, eps)


def hutchinson_power(ifs: IfsSystem, A: PointCloud, n: int, threads: int = 1) -> PointCloud:
    """``H^n(A)`` via the level DP."""
    pres = ifs.presentation
    state = seed_state(pres, A)
    for _ in range(n):
        state = hutchinson_level(ifs.maps, pres, state, threads)
    return state.union()


def naive_hutchinson(ifs: IfsSystem, A: PointCloud, n: int) -> PointCloud:
    """``U_{u in L_n} f_u(A)`` by explicit enumeration (reference implementation)."""
    if n == 0:
        return A
    parts = [
        _snap_keys(compose_word(ifs.maps, u).eval(A.points), A.eps)
        for u in enumerate_language(ifs.shift, n)
    ]
    return PointCloud(np.concatenate(parts), A.eps)


def box_grid(box: Box, eps: float, cap: int = SEED_CAP) -> tuple[PointCloud, float]:
    """Grid fill of the box at pitch ``eps``, coarsened to stay under ``cap`` points.

    Returns the cloud (always on the ``eps`` grid) and the pitch used.
    """
    lo = np.ceil(np.array(box.lo) / eps - 1e-9).astype(np.int64)
    hi = np.floor(np.array(box.hi) / eps + 1e-9).astype(np.int64)
    step = 1
    while np.prod(((hi - lo) // step + 1).astype(float)) > cap:
        step += 1
    axes = []
    for a, b in zip(lo, hi):
        ax = np.arange(a, b + 1, step, dtype=np.int64)
        if ax[-1] != b:
            ax = np.append(ax, b)
        axes.append(ax)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    return PointCloud(mesh, eps, _sorted=True), step * eps


@dataclass
class AttractorReport:
    """Result of :func:`compute_attractor`.

    ``gaps[i]`` is ``d_H(H^i(X), H^{i+1}(X))``; ``S`` is the last level
    computed, ``H^{n_final}(X)``.
    """

    S: PointCloud
    n_final: int
    converged: bool
    epsilon: float
    tol: float
    seed_pitch: float
    gaps: list[float]
    diameter_bounds: list[float]
    nesting_excess: list[float]
    nesting_violations: list[int]
    decay_warnings: list[int]
    level_sizes: list[int]
    level_seconds: list[float] = field(default_factory=list)
    defects: dict[int, float] = field(default_factory=dict)
    final_state: LevelState | None = field(default=None, repr=False)

    @property
    def status(self) -> str:
        return "converged" if self.converged else "unconverged"

    @property
    def slack(self) -> float:
        return 2.0 * self.epsilon * math.sqrt(self.S.dim)

    def to_dict(self) -> dict:
        """JSON-ready summary; timings are left out so the output is reproducible."""
        return {
            "status": self.status,
            "converged": self.converged,
            "n_final": self.n_final,
            "epsilon": self.epsilon,
            "tol": self.tol,
            "seed_pitch": self.seed_pitch,
            "dimension": self.S.dim,
            "num_points": len(self.S),
            "gaps": list(self.gaps),
            "diameter_bounds": list(self.diameter_bounds),
            "nesting_excess": list(self.nesting_excess),
            "nesting_violations": list(self.nesting_violations),
            "decay_warnings": list(self.decay_warnings),
            "level_sizes": list(self.level_sizes),
            "defects": {str(k): v for k, v in sorted(self.defects.items())},
        }


def compute_attractor(
    ifs: IfsSystem,
    eps: float,
    tol: float,
    n_max: int,
    seed: PointCloud | None = None,
    threads: int = 1,
    seed_cap: int = SEED_CAP,
) -> AttractorReport:
    """Iterate ``H`` from the box (or ``seed``) until the levels settle within ``tol``.

    A level ``n`` is accepted when the gap ``d_H(H^{n-1}, H^n)`` is at most
    ``tol`` and the certified bound ``max_{u in L_n} ratio(f_u) * diam(X)`` on
    the size of the pieces ``f_u(X)`` is at most ``tol`` as well.  The gap
    alone can vanish early: for two maps whose images tile ``X``,
    ``H(X) = X`` although ``H^2(X)`` is much smaller.
    """
    d = ifs.dim
    slack = 2.0 * eps * math.sqrt(d)
    if tol < slack * (1 - 1e-12):
        raise ConvergenceConfigError(
            f"tol={tol:g} is below the grid resolution 2*eps*sqrt(d)={slack:g}"
        )
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if seed is None:
        A, pitch = box_grid(ifs.box, eps, seed_cap)
    else:
        if seed.eps != eps:
            raise ValueError("seed cloud uses a different grid")
        A, pitch = seed, eps
    pres = ifs.presentation
    r_max = max(ifs.maps.ratios)
    state = seed_state(pres, A)
    prev = A
    ratios = np.array(ifs.maps.ratios)
    rho = np.array([1.0 if v in pres.initial else 0.0 for v in range(pres.num_vertices)])
    diam_x = ifs.box.diam
    gaps: list[float] = []
    bounds: list[float] = []
    nest: list[float] = []
    violations: list[int] = []
    decay: list[int] = []
    sizes = [len(A)]
    seconds: list[float] = []
    converged = False
    n = 0
    while n < n_max:
        t0 = time.perf_counter()
        state = hutchinson_level(ifs.maps, pres, state, threads)
        cur = state.union()
        n += 1
        new_rho = np.zeros_like(rho)
        for p, q, a in pres.edges:
            new_rho[q] = max(new_rho[q], rho[p] * ratios[a - 1])
        rho = new_rho
        bounds.append(float(rho.max()) * diam_x)
        up = directed_excess(cur, prev)
        down = directed_excess(prev, cur)
        g = max(up, down)
        gaps.append(g)
        nest.append(up)
        sizes.append(len(cur))
        if up > slack:
            violations.append(n - 1)
        if len(gaps) >= 2 and g > r_max * gaps[-2] + 2 * slack:
            decay.append(n - 1)
            log.info("level %d: gap %.3g exceeds geometric decay bound", n - 1, g)
        seconds.append(time.perf_counter() - t0)
        log.debug("level %d: %d points, gap %.3g", n, len(cur), g)
        prev = cur
        if g <= tol and bounds[-1] <= tol:
            converged = True
            break
    return AttractorReport(
        S=prev,
        n_final=n,
        converged=converged,
        epsilon=eps,
        tol=tol,
        seed_pitch=pitch,
        gaps=gaps,
        diameter_bounds=bounds,
        nesting_excess=nest,
        nesting_violations=violations,
        decay_warnings=decay,
        level_sizes=sizes,
        level_seconds=seconds,
        final_state=state,
    )


# ---------------------------------------------------------------------------
# Self-similarity


@dataclass(frozen=True)
class DefectRow:
    """``defect = d_H(H^n(S), S)`` split into its two one-sided parts."""

    n: int
    defect: float
    lower_excess: float  # sup over S of dist(x, H^n(S))
    upper_excess: float  # sup over H^n(S) of dist(y, S)
    passed: bool | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "defect": self.defect,
            "lower_excess": self.lower_excess,
            "upper_excess": self.upper_excess,
            "pass": self.passed,
        }


def _rows(ifs: IfsSystem, S: PointCloud, ns: Sequence[int], tol: float | None, threads: int):
    pres = ifs.presentation
    state = seed_state(pres, S)
    level = 0
    out = []
    for n in sorted(set(ns)):
        if n < 1:
            raise ValueError("order must be >= 1")
        while level < n:
            state = hutchinson_level(ifs.maps, pres, state, threads)
            level += 1
        H = state.union()
        lo = directed_excess(S, H)
        up = directed_excess(H, S)
        dfc = max(lo, up)
        out.append(DefectRow(n, dfc, lo, up, None if tol is None else dfc <= tol))
    return out


def defect_breakdown(ifs: IfsSystem, S: PointCloud, n: int, threads: int = 1) -> DefectRow:
    return _rows(ifs, S, [n], None, threads)[0]


def self_similarity_defect(ifs: IfsSystem, S: PointCloud, n: int, threads: int = 1) -> float:
    """``d_H(H^n(S), S)`` with ``H^n(S)`` computed by the level DP seeded with ``S``."""
    return defect_breakdown(ifs, S, n, threads).defect


def self_similarity_scan(
    ifs: IfsSystem, S: PointCloud, n_max: int, tol: float, threads: int = 1
) -> list[DefectRow]:
    """Defect rows for ``n = 1..n_max`` with ``passed = defect <= tol``."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return _rows(ifs, S, range(1, n_max + 1), tol, threads)


def terminal_pass_start(rows: Sequence[DefectRow]) -> int | None:
    """First ``n`` of the final all-pass run, or None if the last row fails."""
    start = None
    for row in rows:
        if row.passed:
            if start is None:
                start = row.n
        else:
            start = None
    return start
