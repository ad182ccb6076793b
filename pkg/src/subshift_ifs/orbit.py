"""Trajectories, cycles of eventually periodic sequences and limit sets."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .attractor import PointCloud, directed_excess, snap, _snap_keys
from .maps import IfsSystem, compose_word, fixed_point
from .symbolic import SoficPresentation, Word, format_word, compile_presentation

__all__ = [
    "InadmissibleSequenceError",
    "EventuallyPeriodicPoint",
    "Cycle",
    "LimitSetResult",
    "DecompositionReport",
    "trajectory",
    "ids_step",
    "periodic_admissible",
    "cycle_of",
    "periodic_words",
    "transitive_stream",
    "limit_set_along",
    "decomposition_check",
]


class InadmissibleSequenceError(ValueError):
    pass


@dataclass(frozen=True)
class EventuallyPeriodicPoint:
    """The sequence ``transient + period^inf``."""

    transient: Word
    period: Word

    def __post_init__(self):
        object.__setattr__(self, "transient", tuple(int(a) for a in self.transient))
        object.__setattr__(self, "period", tuple(int(a) for a in self.period))
        if not self.period:
            raise ValueError("period word must be nonempty")

    def symbols(self) -> Iterator[int]:
        yield from self.transient
        yield from itertools.cycle(self.period)

    def prefix(self, m: int) -> Word:
        return tuple(itertools.islice(self.symbols(), m))

    def shift(self) -> "EventuallyPeriodicPoint":
        if self.transient:
            return EventuallyPeriodicPoint(self.transient[1:], self.period)
        return EventuallyPeriodicPoint((), self.period[1:] + self.period[:1])

    def __str__(self):
        return f"{format_word(self.transient)}({format_word(self.period)})^inf"


@dataclass(frozen=True)
class Cycle:
    word: Word
    points: np.ndarray = field(compare=False)
    residual: float

    def __len__(self):
        return len(self.points)

    def to_dict(self) -> dict:
        return {
            "word": format_word(self.word),
            "points": self.points.tolist(),
            "residual": self.residual,
        }


def _require_prefix(ifs: IfsSystem, prefix: Sequence[int]) -> Word:
    prefix = tuple(int(a) for a in prefix)
    if prefix and not ifs.shift.is_admissible(prefix):
        raise InadmissibleSequenceError(f"prefix {format_word(prefix)} is not admissible")
    return prefix


def trajectory(ifs: IfsSystem, prefix: Sequence[int], x) -> np.ndarray:
    """``[x, f_{s1}(x), f_{s1 s2}(x), ...]`` as an ``(m + 1, d)`` array."""
    prefix = _require_prefix(ifs, prefix)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((len(prefix) + 1, x.size))
    out[0] = x
    for i, a in enumerate(prefix):
        x = ifs.maps.of(a).eval(x)
        out[i + 1] = x
    return out


def ids_step(ifs: IfsSystem, sigma, x):
    """``T(s1 s2 ..., x) = (s2 s3 ..., f_{s1}(x))``.

    ``sigma`` is an :class:`EventuallyPeriodicPoint` or a finite nonempty
    word (a prefix whose tail is left implicit).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(sigma, EventuallyPeriodicPoint):
        first = next(sigma.symbols())
        return sigma.shift(), ifs.maps.of(first).eval(x)
    sigma = tuple(sigma)
    if not sigma:
        raise ValueError("sequence is empty")
    return sigma[1:], ifs.maps.of(sigma[0]).eval(x)


def periodic_admissible(pres: SoficPresentation, v: Sequence[int], u: Sequence[int]) -> bool:
    """True iff ``v u^inf`` labels an infinite path from an initial vertex."""
    states = pres.read(v)
    seen = set()
    while states and states not in seen:
        seen.add(states)
        states = pres.read(u, states)
    return bool(states)


def _dedupe(points: np.ndarray, tol: float) -> np.ndarray:
    keep: list[np.ndarray] = []
    for p in points:
        if all(np.linalg.norm(p - q) >= tol for q in keep):
            keep.append(p)
    return np.array(keep)


def cycle_of(ifs: IfsSystem, p: EventuallyPeriodicPoint, merge_tol: float = 1e-9) -> Cycle:
    """The finite limit set ``{x0, f_{u1}(x0), ..., f_{u1..u_{m-1}}(x0)}`` of ``v u^inf``."""
    if not periodic_admissible(ifs.presentation, p.transient, p.period):
        raise InadmissibleSequenceError(f"{p} is not a point of the shift")
    u = p.period
    f_u = compose_word(ifs.maps, u)
    x0 = fixed_point(f_u)
    x = x0
    orbit = [x0]
    for a in u[:-1]:
        x = ifs.maps.of(a).eval(x)
        orbit.append(x)
    pts = _dedupe(np.array(orbit), merge_tol)
    residual = float(np.linalg.norm(f_u.eval(x0) - x0))
    return Cycle(u, pts, residual)


def _primitive(u: Word) -> bool:
    n = len(u)
    return all(u != u[k:] + u[:k] for k in range(1, n) if n % k == 0)


def _has_cycle(M: np.ndarray) -> bool:
    """True iff some power ``M^k`` with ``k <= size`` has a nonzero trace."""
    P = M.astype(np.uint8)
    for _ in range(len(M)):
        if np.trace(P):
            return True
        P = ((P @ M.astype(np.uint8)) > 0).astype(np.uint8)
    return False


def periodic_words(pres: SoficPresentation, max_period: int) -> list[Word]:
    """Primitive words ``u`` (least rotation only) with ``u^inf`` in the shift.

    ``u^inf`` is admissible iff some closed path carries a label ``u^k``;
    the vertices at the block boundaries repeat within ``|V|`` blocks, so it
    suffices to look for a nonzero trace among ``M_u^k`` for ``k <= |V|``.
    """
    mats = pres.label_matrices()
    out = []
    # DFS over words with the running boolean product
    stack: list[tuple[Word, np.ndarray]] = [((a,), mats[a]) for a in range(pres.alphabet, 0, -1)]
    while stack:
        w, M = stack.pop()
        if not M.any():
            continue
        if _primitive(w) and w == min(w[k:] + w[:k] for k in range(len(w))) and _has_cycle(M):
            out.append(w)
        if len(w) < max_period:
            for a in range(pres.alphabet, 0, -1):
                stack.append((w + (a,), (M.astype(np.uint8) @ mats[a].astype(np.uint8)) > 0))
    return sorted(out, key=lambda w: (len(w), w))


def _readable_from(pres: SoficPresentation, w: Word) -> set[int]:
    return {p for p in range(pres.num_vertices) if pres.read(w, frozenset({p}))}


def _walk(pres: SoficPresentation, start: int, w: Word) -> int | None:
    """Follow one concrete path labelled ``w`` from ``start``; return its end."""

    def dfs(v, i):
        if i == len(w):
            return v
        for q in pres.transitions[v].get(w[i], ()):
            r = dfs(q, i + 1)
            if r is not None:
                return r
        return None

    return dfs(start, 0)


def _shortest_bridge(pres: SoficPresentation, start: int, targets: set[int]):
    """Shortest label path from ``start`` into ``targets`` as ``(word, end)``."""
    if start in targets:
        return (), start
    prev = {start: None}
    todo = deque([start])
    while todo:
        v = todo.popleft()
        for a, qs in pres.transitions[v].items():
            for q in qs:
                if q in prev:
                    continue
                prev[q] = (v, a)
                if q in targets:
                    end = q
                    path = []
                    while prev[q] is not None:
                        v0, a0 = prev[q]
                        path.append(a0)
                        q = v0
                    return tuple(reversed(path)), end
                todo.append(q)
    return None


@dataclass
class TransitiveStream:
    symbols: list[int]
    block_ends: list[int]  # stream length after covering L_1, L_2, ...
    skipped: list[Word]

    @property
    def transitive(self) -> bool:
        return not self.skipped


def transitive_stream(spec, max_word_len: int) -> TransitiveStream:
    """A prefix of a transitive point: visits every word of ``L_1..L_max``.

    The walk runs along the compiled presentation and joins consecutive
    words by shortest connecting paths.  Words that cannot be reached from
    the current vertex (reducible shifts) are recorded in ``skipped``.
    """
    pres = compile_presentation(spec)
    v = min(pres.initial)
    out: list[int] = []
    ends = []
    skipped = []
    for n in range(1, max_word_len + 1):
        for w in pres.words_from(n):
            bridge = _shortest_bridge(pres, v, _readable_from(pres, w))
            if bridge is None:
                skipped.append(w)
                continue
            bridge, v = bridge
            v = _walk(pres, v, w)
            out.extend(bridge)
            out.extend(w)
        ends.append(len(out))
    return TransitiveStream(out, ends, skipped)


@dataclass
class LimitSetResult:
    cloud: PointCloud
    converged: bool
    final_diameter: float
    label: str
    window: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "final_diameter": self.final_diameter,
            "label": self.label,
            "window": list(self.window),
            "points": self.cloud.points.tolist(),
        }


def limit_set_along(
    ifs: IfsSystem,
    stream,
    A: PointCloud,
    m_max: int,
    tol: float,
    label: str | None = None,
) -> LimitSetResult:
    """Cluster points of ``f_{s1..sm}(A)`` approximated over ``m in [m_max/2, m_max]``."""
    if isinstance(stream, EventuallyPeriodicPoint):
        symbols = stream.symbols()
        label = label or "eventually periodic"
    elif isinstance(stream, TransitiveStream):
        symbols = iter(stream.symbols)
        label = label or ("transitive stream" if stream.transitive else "prefix-horizon approximation")
    else:
        symbols = iter(stream)
        label = label or "prefix-horizon approximation"
    prefix = list(itertools.islice(symbols, m_max))
    if len(prefix) < m_max:
        raise ValueError(f"stream ended after {len(prefix)} symbols, need {m_max}")
    _require_prefix(ifs, prefix)
    start = m_max // 2
    keys = A.keys
    eps = A.eps
    collected = []
    for m, a in enumerate(prefix, 1):
        f = ifs.maps.of(a)
        keys = np.unique(_snap_keys((keys * eps) @ f.matrix.T + f.offset, eps), axis=0)
        if m >= start:
            collected.append(keys)
    cloud = PointCloud(np.concatenate(collected), eps)
    diam = float(np.linalg.norm((keys.max(axis=0) - keys.min(axis=0)) * eps))
    return LimitSetResult(cloud, diam <= tol, diam, label, (start, m_max))


@dataclass
class DecompositionReport:
    cycles: list[Cycle]
    cycle_excess: list[float]  # per cycle: sup over its points of dist(x, S)
    all_within_tol: bool
    coverage_excess: float  # sup over S of dist(x, union of cycles)
    tol: float

    def to_dict(self) -> dict:
        return {
            "cycles": [c.to_dict() for c in self.cycles],
            "cycle_excess": self.cycle_excess,
            "all_within_tol": self.all_within_tol,
            "coverage_excess": self.coverage_excess,
            "tol": self.tol,
        }


def decomposition_check(
    ifs: IfsSystem,
    S: PointCloud,
    samples: Iterable[EventuallyPeriodicPoint],
    tol: float,
) -> DecompositionReport:
    """Check every sampled cycle lies in ``S`` and measure how well cycles cover ``S``."""
    cycles = [cycle_of(ifs, p) for p in samples]
    if not cycles:
        raise ValueError("no samples given")
    excess = [float(S.distance_to(c.points).max()) for c in cycles]
    union = snap(np.concatenate([c.points for c in cycles]), S.eps)
    cover = directed_excess(S, union)
    return DecompositionReport(cycles, excess, all(e <= tol for e in excess), cover, tol)
