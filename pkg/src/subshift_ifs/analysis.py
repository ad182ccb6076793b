"""Separation criteria, factor-code verification and finite-horizon probes.

Dynamics outputs are evidence stamped with the horizon, never proofs:
``thick-up-to-horizon`` means a run of consecutive return times of length
at least ``sqrt(H)``; ``cofinite-up-to-horizon`` means every ``n`` in
``[M, H]`` is a return time for some ``M <= H/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .attractor import (
    PointCloud,
    compute_attractor,
    directed_excess,
    hausdorff_distance,
    hutchinson_level,
    seed_state,
    snap,
)
from .maps import ContractionMap, IfsSystem, MapFamily, compose_word
from .orbit import EventuallyPeriodicPoint, cycle_of, periodic_words
from .symbolic import FactorCode, PowerShift, enumerate_language, format_word

__all__ = [
    "SCHEMA_VERSION",
    "SeparationCapError",
    "HypothesisError",
    "ProbeError",
    "check_ratio_sum",
    "check_separation",
    "separation_report",
    "check_image_disjointness_on_S",
    "verify_factoring",
    "return_time_probe",
    "classify_return_times",
    "periodic_density_probe",
    "power_system",
]

SCHEMA_VERSION = 1
DEFAULT_IMAGE_CAP = 4096
DEFAULT_HORIZON_CAP = 1000


class SeparationCapError(ValueError):
    pass


class HypothesisError(ValueError):
    """A check was run without the hypothesis it depends on."""


class ProbeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Ratio sum and separation


@dataclass(frozen=True)
class RatioSum:
    total: float
    passed: bool

    def __iter__(self):
        return iter((self.total, self.passed))


def check_ratio_sum(family: Sequence[ContractionMap]) -> RatioSum:
    """Sum of certified ratios; passes iff it is below 1."""
    total = float(sum(f.ratio for f in family))
    return RatioSum(total, total < 1.0)


@dataclass(frozen=True)
class SeparationResult:
    n: int
    status: str  # "pass", "fail" or "inconclusive"
    min_gap: float
    num_images: int
    closest_pair: tuple[str, str] | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "status": self.status,
            "pass": self.passed,
            "min_gap": self.min_gap,
            "num_images": self.num_images,
            "closest_pair": list(self.closest_pair) if self.closest_pair else None,
        }


def _hull(points: np.ndarray) -> np.ndarray:
    """Convex hull in 2D (monotone chain), counter-clockwise, no repeats."""
    pts = np.unique(np.round(points, 15), axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _axes(poly: np.ndarray) -> list[np.ndarray]:
    if len(poly) == 1:
        return []
    edges = np.roll(poly, -1, axis=0) - poly
    if len(poly) == 2:
        edges = edges[:1]
    out = []
    for e in edges:
        nrm = np.array([-e[1], e[0]])
        ln = np.linalg.norm(nrm)
        if ln > 0:
            out.append(nrm / ln)
        if len(poly) == 2 and np.linalg.norm(e) > 0:
            out.append(e / np.linalg.norm(e))
    return out


def _seg_point(p, a, b) -> float:
    ab = b - a
    L = float(ab @ ab)
    t = 0.0 if L == 0 else min(1.0, max(0.0, float((p - a) @ ab) / L))
    return float(np.linalg.norm(p - (a + t * ab)))


def _poly_distance(P: np.ndarray, Q: np.ndarray) -> float:
    """0 if the convex polygons intersect, else their Euclidean distance."""
    axes = _axes(P) + _axes(Q)
    d = P[0] - Q[0]
    if np.linalg.norm(d) > 0:
        axes.append(d / np.linalg.norm(d))
    separated = False
    for ax in axes:
        p = P @ ax
        q = Q @ ax
        if p.max() < q.min() or q.max() < p.min():
            separated = True
            break
    if not separated:
        return 0.0

    def segs(X):
        if len(X) == 1:
            return [(X[0], X[0])]
        if len(X) == 2:
            return [(X[0], X[1])]
        return list(zip(X, np.roll(X, -1, axis=0)))

    best = math.inf
    for a, b in segs(Q):
        for p in P:
            best = min(best, _seg_point(p, a, b))
    for a, b in segs(P):
        for q in Q:
            best = min(best, _seg_point(q, a, b))
    return best


def _box_gap(lo, hi, i, js):
    """Euclidean distance between bounding box ``i`` and boxes ``js``."""
    d = np.maximum(0.0, np.maximum(lo[js] - hi[i], lo[i] - hi[js]))
    return np.sqrt((d * d).sum(axis=1))


def check_separation(ifs: IfsSystem, n: int, cap: int = DEFAULT_IMAGE_CAP) -> SeparationResult:
    """Are the images ``f_u(X)``, ``u in L_n``, pairwise disjoint?

    Exact in 1D (intervals) and 2D (convex polygons, separating axes);
    bounding boxes in higher dimensions, where an overlap is inconclusive.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    count = ifs.presentation.count_words(n)
    if count > cap:
        raise SeparationCapError(
            f"|L_{n}| = {count} exceeds the cap {cap}; use power_shift chunking instead"
        )
    words = enumerate_language(ifs.shift, n)
    corners = ifs.box.corners()
    images = np.array([compose_word(ifs.maps, u).eval(corners) for u in words])
    m = len(words)
    if m == 1:
        return SeparationResult(n, "pass", math.inf, 1)
    d = ifs.dim
    lo = images.min(axis=1)
    hi = images.max(axis=1)
    diam = ifs.box.diam
    thresh = 1e-12 * diam

    if d == 1:
        order = np.argsort(lo[:, 0], kind="stable")
        l = lo[order, 0]
        h = hi[order, 0]
        run_hi = np.maximum.accumulate(h)
        gaps = l[1:] - run_hi[:-1]
        k = int(np.argmin(gaps))
        g = max(0.0, float(gaps[k]))
        # the interval realising the running maximum
        left = int(np.argmax(h[: k + 1] == run_hi[k]))
        pair = (format_word(words[order[left]]), format_word(words[order[k + 1]]))
        return SeparationResult(n, "pass" if g > thresh else "fail", g, m, pair)

    # candidate pairs ordered by bounding-box distance, a lower bound on the gap
    if d == 2:
        polys = [_hull(img) for img in images]

        def exact(i, j):
            return _poly_distance(polys[i], polys[j])
    else:

        def exact(i, j):
            return float(_box_gap(lo, hi, i, np.array([j]))[0])

    best = math.inf
    pair = None
    # upper bound from each image's nearest box neighbour
    for i in range(m):
        js = np.delete(np.arange(m), i)
        j = int(js[np.argmin(_box_gap(lo, hi, i, js))])
        g = exact(i, j)
        if g < best:
            best, pair = g, (i, j)
    cand = []
    for i in range(m - 1):
        js = np.arange(i + 1, m)
        lb = _box_gap(lo, hi, i, js)
        sel = lb <= best
        cand.extend((float(b), i, int(j)) for b, j in zip(lb[sel], js[sel]))
    cand.sort()
    for lb, i, j in cand:
        if lb >= best:
            break
        g = exact(i, j)
        if g < best:
            best, pair = g, (i, j)
    names = (format_word(words[pair[0]]), format_word(words[pair[1]])) if pair else None
    if best > thresh:
        status = "pass"
    else:
        status = "fail" if d == 2 else "inconclusive"
    return SeparationResult(n, status, float(best), m, names)


@dataclass
class SeparationReport:
    ratio_sum: float
    ratio_sum_pass: bool
    per_n: dict[int, SeparationResult]
    first_passing_n: int | None
    propagation_ok: bool

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "ratio_sum": self.ratio_sum,
            "ratio_sum_pass": self.ratio_sum_pass,
            "separation": {str(k): v.to_dict() for k, v in sorted(self.per_n.items())},
            "first_passing_n": self.first_passing_n,
            "propagation_ok": self.propagation_ok,
        }


def separation_report(ifs: IfsSystem, ns: Sequence[int], cap: int = DEFAULT_IMAGE_CAP) -> SeparationReport:
    total, ok = check_ratio_sum(ifs.maps)
    per_n = {n: check_separation(ifs, n, cap) for n in sorted(set(ns))}
    passing = [n for n, r in per_n.items() if r.passed]
    first = passing[0] if passing else None
    prop = first is None or all(r.passed for n, r in per_n.items() if n >= first)
    return SeparationReport(total, ok, per_n, first, prop)


def check_image_disjointness_on_S(ifs: IfsSystem, S: PointCloud) -> list[dict]:
    """Minimum distance between ``f_i(S)`` and ``f_j(S)`` for every ``i < j``."""
    if not ifs.totally_invariant:
        raise HypothesisError("the sub-shift must be declared totally_invariant")
    slack = 2.0 * S.eps * math.sqrt(S.dim)
    imgs = [S.image(f) for f in ifs.maps]
    out = []
    for i in range(len(imgs)):
        for j in range(i + 1, len(imgs)):
            dmin = math.sqrt(float(imgs[j].index.nearest_sq(imgs[i].keys).min())) * S.eps
            out.append({"i": i + 1, "j": j + 1, "min_distance": dmin, "pass": dmin > slack})
    return out


# ---------------------------------------------------------------------------
# Factoring


@dataclass
class FactorCheckReport:
    residuals: dict[str, float]  # per admissible window: max over sample points
    max_residual: float
    attractor_distance: float | None
    budget: float | None
    samples: int

    @property
    def commutes(self) -> bool:
        return self.max_residual <= 1e-10

    @property
    def attractor_ok(self) -> bool | None:
        if self.attractor_distance is None:
            return None
        return self.attractor_distance <= self.budget

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "residuals": dict(sorted(self.residuals.items())),
            "max_residual": self.max_residual,
            "commutes": self.commutes,
            "attractor_distance": self.attractor_distance,
            "budget": self.budget,
            "attractor_ok": self.attractor_ok,
            "samples": self.samples,
        }


def verify_factoring(
    src: IfsSystem,
    dst: IfsSystem,
    code: FactorCode,
    phi2=None,
    samples: int = 64,
    seed: int = 0,
    eps: float | None = None,
    tol: float | None = None,
    n_max: int = 60,
) -> FactorCheckReport:
    """Check ``phi2 ∘ f_a = f'_{Phi(w)} ∘ phi2`` on sampled points for every window.

    ``a`` is the window's symbol at position ``memory``.  ``phi2`` is any
    object with ``matrix`` and ``offset`` (it need not contract) and
    defaults to the identity.  With ``eps`` and ``tol`` the two attractors are
    computed and ``d_H(phi2(S), S')`` is compared with ``2 tol``.
    """
    missing = code.check_total(src.shift)
    if missing:
        from .symbolic import BlockMapDomainError

        raise BlockMapDomainError(f"window {format_word(missing[0])} not in block map")
    d = src.dim
    if phi2 is None:
        A2, b2 = np.eye(d), np.zeros(d)
    else:
        A2, b2 = phi2.matrix, phi2.offset
    rng = np.random.default_rng(seed)
    box = src.box
    xs = np.vstack([box.corners(), rng.uniform(box.lo, box.hi, size=(samples, d))])

    def phi(x):
        return x @ A2.T + b2

    residuals = {}
    for w in enumerate_language(src.shift, code.window):
        target = code.table[w]
        if not 1 <= target <= len(dst.maps):
            raise ValueError(f"block map sends {format_word(w)} to unknown symbol {target}")
        lhs = phi(src.maps.of(w[code.memory]).eval(xs))
        rhs = dst.maps.of(target).eval(phi(xs))
        residuals[format_word(w)] = float(np.linalg.norm(lhs - rhs, axis=1).max())
    max_res = max(residuals.values())
    dist = budget = None
    if eps is not None and tol is not None:
        S = compute_attractor(src, eps, tol, n_max).S
        S2 = compute_attractor(dst, eps, tol, n_max).S
        img = snap(phi(S.points), eps)
        dist = hausdorff_distance(img, S2)
        budget = 2.0 * tol
    return FactorCheckReport(residuals, max_res, dist, budget, len(xs))


# ---------------------------------------------------------------------------
# Return-time probes


def classify_return_times(observed: Sequence[int], horizon: int) -> str:
    """Fixed evidence rules; see the module docstring."""
    obs = sorted(set(int(n) for n in observed))
    if not obs:
        return "empty"
    s = set(obs)
    M = horizon
    while M - 1 >= 1 and (M - 1) in s:
        M -= 1
    if horizon in s and M <= horizon / 2:
        return "cofinite-up-to-horizon"
    run = best = 0
    for n in range(1, horizon + 1):
        run = run + 1 if n in s else 0
        best = max(best, run)
    if best >= math.sqrt(horizon):
        return "thick-up-to-horizon"
    return "nonempty"


@dataclass
class ReturnTimeReport:
    horizon: int
    observed: list[int]
    classification: str
    note: str = ""
    evidence: bool = field(default=True, init=False)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "horizon": self.horizon,
            "observed": self.observed,
            "classification": self.classification,
            "evidence_only": self.evidence,
            "thickness_rule": "run length >= sqrt(H)",
            "cofinite_rule": "[M, H] covered for some M <= H/2",
            "note": self.note,
        }


def _ball(cloud: PointCloud, center, radius: float) -> np.ndarray:
    c = np.atleast_1d(np.asarray(center, dtype=float))
    return np.linalg.norm(cloud.points - c, axis=1) < radius


def return_time_probe(
    ifs: IfsSystem,
    S: PointCloud,
    U: tuple,
    V: tuple,
    horizon: int,
    slack: float | None = None,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
) -> ReturnTimeReport:
    """Observed ``N(U, V)`` up to ``horizon`` for the system restricted to ``S``.

    ``U`` and ``V`` are ``(center, radius)`` open balls.  Starting from the
    points of ``S`` in ``U``, images are pushed through the presentation one
    level at a time; points that leave the ``slack`` neighbourhood of ``S``
    are dropped, which models the maps acting on ``S`` only.
    """
    if horizon < 1:
        raise ProbeError("horizon must be >= 1")
    if horizon > horizon_cap:
        raise ProbeError(f"horizon {horizon} exceeds the cap {horizon_cap}")
    if slack is None:
        slack = 2.0 * S.eps * math.sqrt(S.dim)
    start = S.subset(_ball(S, *U))
    if start is None or not _ball(S, *V).any():
        return ReturnTimeReport(horizon, [], "empty", "U or V misses S")
    pres = ifs.presentation
    state = seed_state(pres, start)
    observed = []
    for n in range(1, horizon + 1):
        state = hutchinson_level(ifs.maps, pres, state)
        clouds = []
        for c in state.clouds:
            if c is not None:
                c = c.subset(c.within(S, slack))
            clouds.append(c)
        state = type(state)(tuple(clouds), state.eps)
        if all(c is None for c in clouds):
            break
        if any(c is not None and _ball(c, *V).any() for c in clouds):
            observed.append(n)
    return ReturnTimeReport(horizon, observed, classify_return_times(observed, horizon))


def power_system(ifs: IfsSystem, N: int) -> IfsSystem:
    """The system over ``power_shift(spec, N)`` with ``f_w`` for each chunk ``w``."""
    shift = PowerShift(ifs.shift, N)
    maps = MapFamily([compose_word(ifs.maps, w) for w in shift.chunks])
    return IfsSystem(ifs.box, maps, shift, ifs.totally_invariant,
                     ifs.declared_rooted_in_fixed_point, ifs.name)


@dataclass
class PeriodicDensityReport:
    max_period: int
    num_cycles: int
    excess: float | None
    message: str

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "max_period": self.max_period,
            "num_cycles": self.num_cycles,
            "coverage_excess": self.excess,
            "message": self.message,
        }


def periodic_density_probe(ifs: IfsSystem, S: PointCloud, max_period: int) -> PeriodicDensityReport:
    """How far ``S`` sticks out of the union of cycles with period ``<= max_period``."""
    words = periodic_words(ifs.presentation, max_period)
    if not words:
        return PeriodicDensityReport(max_period, 0, None, "no cycles found")
    pts = np.concatenate([cycle_of(ifs, EventuallyPeriodicPoint((), u)).points for u in words])
    union = snap(pts, S.eps)
    return PeriodicDensityReport(max_period, len(words), directed_excess(S, union), "ok")
