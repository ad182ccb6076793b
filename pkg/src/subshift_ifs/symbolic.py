"""Sub-shifts over finite alphabets.

A sub-shift is described by one of the frozen spec classes below
(:class:`Full`, :class:`Sft`, :class:`Sofic`, :class:`CodedFinite`,
:class:`CodedTruncated`, :class:`OrbitClosure`, plus the derived
:class:`PowerShift` and :class:`HigherBlock`).  Every spec answers
admissibility queries and compiles to a :class:`SoficPresentation`, a
labeled graph whose path labels (read from the initial vertices) are
exactly the language of the shift.

Symbols are the integers ``1..k``; words are tuples of symbols.  All shifts
are one-sided (right-infinite), so a word is admissible iff it is a prefix of
some point of the shift.
"""

from __future__ import annotations

import functools
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

Word = tuple

__all__ = [
    "EmptyShiftError",
    "SymbolError",
    "BlockMapDomainError",
    "SoficPresentation",
    "Full",
    "Sft",
    "Sofic",
    "CodedFinite",
    "GeneratorFamily",
    "CodedTruncated",
    "OrbitClosure",
    "PowerShift",
    "HigherBlock",
    "FactorCode",
    "is_admissible",
    "enumerate_language",
    "compile_presentation",
    "power_shift",
    "higher_block",
    "apply_block_map",
    "word_key",
    "format_word",
    "parse_word",
]


class EmptyShiftError(ValueError):
    """Raised when a spec describes the empty shift."""


class SymbolError(ValueError):
    """Raised for symbols outside ``1..k``."""


class BlockMapDomainError(KeyError):
    """Raised when a sliding window is not in a block map's domain."""


def word_key(w: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sort key for the length-then-lexicographic word order."""
    return (len(w), tuple(w))


def format_word(w: Sequence[int]) -> str:
    if not w:
        return ""
    if max(w) < 10:
        return "".join(str(a) for a in w)
    return ".".join(str(a) for a in w)


def parse_word(text: str | Sequence[int]) -> Word:
    """Parse ``"121"``, ``"1.12.3"`` or a list of ints into a word."""
    if isinstance(text, str):
        text = text.strip()
        if text in ("", "e", "eps", "ε"):
            return ()
        if "." in text:
            return tuple(int(t) for t in text.split("."))
        return tuple(int(c) for c in text)
    return tuple(int(a) for a in text)


def _check_symbols(w: Sequence[int], k: int) -> Word:
    w = tuple(int(a) for a in w)
    for a in w:
        if not 1 <= a <= k:
            raise SymbolError(f"symbol {a} outside alphabet 1..{k}")
    return w


def _has_factor(w: Word, f: Word) -> bool:
    n = len(f)
    return any(w[i : i + n] == f for i in range(len(w) - n + 1))


# ---------------------------------------------------------------------------
# Presentations


@dataclass(frozen=True)
class SoficPresentation:
    """Labeled directed graph; vertices are ``0..V-1``.

    ``edges`` holds ``(source, target, label)`` triples and ``initial`` the
    vertices where paths may start.  ``names`` are only for display.
    """

    alphabet: int
    names: tuple[str, ...]
    edges: tuple[tuple[int, int, int], ...]
    initial: frozenset[int]

    def __post_init__(self):
        n = len(self.names)
        for p, q, a in self.edges:
            if not (0 <= p < n and 0 <= q < n):
                raise ValueError(f"edge ({p}, {q}, {a}) references unknown vertex")
            if not 1 <= a <= self.alphabet:
                raise SymbolError(f"edge label {a} outside alphabet 1..{self.alphabet}")
        if not self.initial <= set(range(n)):
            raise ValueError("initial vertices must be graph vertices")

    @property
    def num_vertices(self) -> int:
        return len(self.names)

    @functools.cached_property
    def transitions(self) -> tuple[dict[int, tuple[int, ...]], ...]:
        """Per vertex: label -> sorted tuple of successor vertices."""
        table: list[dict[int, set[int]]] = [dict() for _ in self.names]
        for p, q, a in self.edges:
            table[p].setdefault(a, set()).add(q)
        return tuple({a: tuple(sorted(qs)) for a, qs in sorted(t.items())} for t in table)

    def in_edges(self, q: int) -> list[tuple[int, int, int]]:
        return [e for e in self.edges if e[1] == q]

    def step(self, states: frozenset[int], a: int) -> frozenset[int]:
        out: set[int] = set()
        for p in states:
            out.update(self.transitions[p].get(a, ()))
        return frozenset(out)

    def read(self, w: Iterable[int], start: frozenset[int] | None = None) -> frozenset[int]:
        """Vertices reachable from ``start`` (default: initial) along label ``w``."""
        states = self.initial if start is None else start
        for a in w:
            if not states:
                break
            states = self.step(states, a)
        return states

    def accepts(self, w: Iterable[int]) -> bool:
        return bool(self.read(w))

    def is_deterministic(self) -> bool:
        return all(len(qs) == 1 for t in self.transitions for qs in t.values())

    def pruned(self) -> "SoficPresentation":
        """Drop vertices with no infinite forward path or unreachable from ``initial``."""
        live = set(range(self.num_vertices))
        edges = list(self.edges)
        while True:
            has_out = {p for p, q, _ in edges if q in live and p in live}
            if has_out == live:
                break
            live = has_out
            edges = [e for e in edges if e[0] in live and e[1] in live]
        reach: set[int] = set()
        todo = deque(v for v in self.initial if v in live)
        reach.update(todo)
        succ: dict[int, list[int]] = {}
        for p, q, _ in edges:
            succ.setdefault(p, []).append(q)
        while todo:
            p = todo.popleft()
            for q in succ.get(p, ()):
                if q not in reach:
                    reach.add(q)
                    todo.append(q)
        keep = sorted(reach)
        if not keep:
            raise EmptyShiftError("presentation prunes to the empty graph")
        remap = {v: i for i, v in enumerate(keep)}
        new_edges = sorted(
            {(remap[p], remap[q], a) for p, q, a in edges if p in reach and q in reach}
        )
        return SoficPresentation(
            alphabet=self.alphabet,
            names=tuple(self.names[v] for v in keep),
            edges=tuple(new_edges),
            initial=frozenset(remap[v] for v in self.initial if v in reach),
        )

    def minimized(self) -> "SoficPresentation":
        """Moore minimization; only valid for deterministic presentations."""
        if not self.is_deterministic():
            raise ValueError("minimization needs a deterministic presentation")
        n = self.num_vertices
        delta = [{a: qs[0] for a, qs in t.items()} for t in self.transitions]
        block = [0] * n
        while True:
            sigs = [
                (block[p], tuple((a, block[q]) for a, q in sorted(delta[p].items())))
                for p in range(n)
            ]
            order = {s: i for i, s in enumerate(sorted(set(sigs)))}
            new_block = [order[s] for s in sigs]
            if len(set(new_block)) == len(set(block)):
                block = new_block
                break
            block = new_block
        nb = len(set(block))
        # representative name: the longest member name, ties by order
        names = [""] * nb
        for p in range(n):
            b = block[p]
            if len(self.names[p]) > len(names[b]) or not names[b]:
                names[b] = self.names[p]
        edges = sorted({(block[p], block[q], a) for p, q, a in self.edges})
        return SoficPresentation(
            alphabet=self.alphabet,
            names=tuple(names),
            edges=tuple(edges),
            initial=frozenset(block[v] for v in self.initial),
        )

    def label_matrices(self):
        """Boolean adjacency matrix per symbol, as a dict label -> ndarray."""
        import numpy as np

        n = self.num_vertices
        mats = {a: np.zeros((n, n), dtype=bool) for a in range(1, self.alphabet + 1)}
        for p, q, a in self.edges:
            mats[a][p, q] = True
        return mats

    def words_from(self, n: int) -> list[Word]:
        """Path labels of length ``n`` from the initial vertices, in lex order."""
        if n < 0:
            raise ValueError("word length must be non-negative")
        if n == 0:
            return [()]
        out: list[Word] = []
        labels = range(1, self.alphabet + 1)

        def dfs(states: frozenset[int], prefix: list[int]):
            if len(prefix) == n:
                out.append(tuple(prefix))
                return
            for a in labels:
                nxt = self.step(states, a)
                if nxt:
                    prefix.append(a)
                    dfs(nxt, prefix)
                    prefix.pop()

        dfs(self.initial, [])
        return out

    def count_words(self, n: int) -> int:
        """Number of distinct path labels of length ``n`` (subset DP)."""
        layer: dict[frozenset[int], int] = {self.initial: 1}
        for _ in range(n):
            nxt: dict[frozenset[int], int] = {}
            for states, c in layer.items():
                for a in range(1, self.alphabet + 1):
                    s = self.step(states, a)
                    if s:
                        nxt[s] = nxt.get(s, 0) + c
            layer = nxt
        return sum(layer.values())


# ---------------------------------------------------------------------------
# Sub-shift specs


class _Spec:
    alphabet: int

    def is_admissible(self, w: Sequence[int]) -> bool:
        raise NotImplementedError

    def _build_presentation(self) -> SoficPresentation:
        raise NotImplementedError

    @property
    def presentation(self) -> SoficPresentation:
        return compile_presentation(self)

    def language(self, n: int) -> list[Word]:
        return enumerate_language(self, n)


@dataclass(frozen=True)
class Full(_Spec):
    alphabet: int

    def __post_init__(self):
        if self.alphabet < 1:
            raise ValueError("alphabet size must be >= 1")

    def is_admissible(self, w):
        _check_symbols(w, self.alphabet)
        return True

    def _build_presentation(self):
        edges = tuple((0, 0, a) for a in range(1, self.alphabet + 1))
        return SoficPresentation(self.alphabet, ("*",), edges, frozenset({0}))


def _normalize_forbidden(words: Iterable[Sequence[int]], k: int) -> tuple[Word, ...]:
    ws = {_check_symbols(w, k) for w in words}
    if any(len(w) == 0 for w in ws):
        raise ValueError("the empty word cannot be forbidden")
    keep = [w for w in ws if not any(v != w and _has_factor(w, v) for v in ws)]
    return tuple(sorted(keep, key=word_key))


@dataclass(frozen=True)
class Sft(_Spec):
    """Shift of finite type given by forbidden words (normalized on construction)."""

    alphabet: int
    forbidden: tuple[Word, ...]

    def __post_init__(self):
        if self.alphabet < 1:
            raise ValueError("alphabet size must be >= 1")
        object.__setattr__(self, "forbidden", _normalize_forbidden(self.forbidden, self.alphabet))

    @property
    def memory(self) -> int:
        return max((len(f) for f in self.forbidden), default=1) - 1

    def _clean_step(self, context: Word, a: int) -> Word | None:
        t = context + (a,)
        for f in self.forbidden:
            if len(f) <= len(t) and t[len(t) - len(f) :] == f:
                return None
        m = self.memory
        return t[len(t) - m :] if m else ()

    @functools.cached_property
    def _live_contexts(self) -> frozenset[Word]:
        """Contexts (last ``memory`` symbols) that start an infinite clean path."""
        m = self.memory
        contexts = [tuple(c) for c in itertools.product(range(1, self.alphabet + 1), repeat=m)]
        contexts = [c for c in contexts if not any(_has_factor(c, f) for f in self.forbidden)]
        live = set(contexts)
        while True:
            nxt = {
                c
                for c in live
                if any(self._clean_step(c, a) in live for a in range(1, self.alphabet + 1))
            }
            if nxt == live:
                return frozenset(live)
            live = nxt

    def is_admissible(self, w):
        w = _check_symbols(w, self.alphabet)
        if any(_has_factor(w, f) for f in self.forbidden):
            return False
        # right extendability: the final context must reach a cycle of clean
        # contexts; short words are padded by trying every clean extension.
        m = self.memory
        if len(w) >= m:
            return (w[len(w) - m :] if m else ()) in self._live_contexts
        frontier = {w}
        while frontier and len(next(iter(frontier))) < m:
            frontier = {
                u + (a,)
                for u in frontier
                for a in range(1, self.alphabet + 1)
                if not any(_has_factor(u + (a,), f) for f in self.forbidden)
            }
        return any(u[len(u) - m :] in self._live_contexts for u in frontier)

    def _build_presentation(self):
        # deterministic automaton on suffix contexts, started at the empty context
        index: dict[Word, int] = {(): 0}
        names = ["e"]
        edges = []
        todo = deque([()])
        m = self.memory
        while todo:
            c = todo.popleft()
            for a in range(1, self.alphabet + 1):
                t = c + (a,)
                if any(t[len(t) - len(f) :] == f for f in self.forbidden if len(f) <= len(t)):
                    continue
                nxt = t[len(t) - m :] if len(t) > m else t
                if nxt not in index:
                    index[nxt] = len(names)
                    names.append(format_word(nxt) or "e")
                    todo.append(nxt)
                edges.append((index[c], index[nxt], a))
        pres = SoficPresentation(self.alphabet, tuple(names), tuple(edges), frozenset({0}))
        return pres.pruned().minimized().pruned()


@dataclass(frozen=True)
class Sofic(_Spec):
    """Sofic shift given directly by a labeled graph."""

    graph: SoficPresentation

    @property
    def alphabet(self) -> int:
        return self.graph.alphabet

    def __post_init__(self):
        for v in range(self.graph.num_vertices):
            if not self.graph.transitions[v]:
                raise ValueError(f"vertex {self.graph.names[v]!r} has no outgoing edge")

    @classmethod
    def from_edges(
        cls,
        alphabet: int,
        edges: Iterable[tuple[str, str, int]],
        vertices: Sequence[str] | None = None,
        initial: Iterable[str] | None = None,
    ) -> "Sofic":
        edges = [(str(p), str(q), int(a)) for p, q, a in edges]
        if vertices is None:
            seen: dict[str, None] = {}
            for p, q, _ in edges:
                seen.setdefault(p)
                seen.setdefault(q)
            vertices = list(seen)
        idx = {v: i for i, v in enumerate(vertices)}
        init = frozenset(idx[v] for v in (vertices if initial is None else initial))
        g = SoficPresentation(
            alphabet,
            tuple(vertices),
            tuple(sorted({(idx[p], idx[q], a) for p, q, a in edges})),
            init,
        )
        return cls(g)

    def is_admissible(self, w):
        w = _check_symbols(w, self.alphabet)
        return self.presentation.accepts(w)

    def _build_presentation(self):
        return self.graph.pruned()


def _flower(alphabet: int, generators: Sequence[Word]) -> SoficPresentation:
    names = ["hub"]
    edges = []
    for gi, g in enumerate(generators):
        prev = 0
        for j, a in enumerate(g):
            if j == len(g) - 1:
                nxt = 0
            else:
                names.append(f"g{gi}.{j + 1}")
                nxt = len(names) - 1
            edges.append((prev, nxt, a))
            prev = nxt
    pres = SoficPresentation(alphabet, tuple(names), tuple(edges), frozenset(range(len(names))))
    return pres.pruned()


def _normalize_generators(gens: Iterable[Sequence[int]], k: int) -> tuple[Word, ...]:
    ws = {_check_symbols(g, k) for g in gens}
    if not ws or any(len(g) == 0 for g in ws):
        raise EmptyShiftError("coded shift needs at least one nonempty generator")
    return tuple(sorted(ws, key=word_key))


@dataclass(frozen=True)
class CodedFinite(_Spec):
    """Coded shift: closure of free concatenations of finitely many generators."""

    alphabet: int
    generators: tuple[Word, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "generators", _normalize_generators(self.generators, self.alphabet)
        )

    def is_admissible(self, w):
        w = _check_symbols(w, self.alphabet)
        return self.presentation.accepts(w)

    def _build_presentation(self):
        return _flower(self.alphabet, self.generators)


@dataclass(frozen=True)
class GeneratorFamily:
    """Words ``prefix + repeat * j + suffix`` for ``j >= min_repeat``."""

    prefix: Word = ()
    repeat: Word = ()
    suffix: Word = ()
    min_repeat: int = 0

    def words(self, max_length: int) -> Iterator[Word]:
        base = len(self.prefix) + len(self.suffix)
        j = self.min_repeat
        while base + j * len(self.repeat) <= max_length:
            w = self.prefix + self.repeat * j + self.suffix
            if w:
                yield w
            if not self.repeat:
                break
            j += 1


@dataclass(frozen=True)
class CodedTruncated(_Spec):
    """Coded shift with an infinite generator family, truncated at ``max_length``.

    Only generators of length <= ``max_length`` are used, which yields a
    subshift of the true coded shift (an inner approximation).
    """

    alphabet: int
    families: tuple[GeneratorFamily, ...]
    max_length: int
    words: tuple[Word, ...] = ()

    def __post_init__(self):
        if self.max_length < 1:
            raise ValueError("truncation length must be >= 1")

    @functools.cached_property
    def generators(self) -> tuple[Word, ...]:
        gens = [w for w in self.words if len(w) <= self.max_length]
        for fam in self.families:
            gens.extend(fam.words(self.max_length))
        return _normalize_generators(gens, self.alphabet)

    def is_admissible(self, w):
        w = _check_symbols(w, self.alphabet)
        return self.presentation.accepts(w)

    def _build_presentation(self):
        return _flower(self.alphabet, self.generators)


@dataclass(frozen=True)
class OrbitClosure(_Spec):
    """Orbit closure of the eventually periodic point ``transient + period^inf``."""

    alphabet: int
    transient: Word
    period: Word

    def __post_init__(self):
        object.__setattr__(self, "transient", _check_symbols(self.transient, self.alphabet))
        object.__setattr__(self, "period", _check_symbols(self.period, self.alphabet))
        if not self.period:
            raise EmptyShiftError("periodic word must be nonempty")

    def is_admissible(self, w):
        w = _check_symbols(w, self.alphabet)
        reps = len(w) // len(self.period) + 2
        point = self.transient + self.period * reps
        return _has_factor(point, w)

    def _build_presentation(self):
        v, u = self.transient, self.period
        names = [f"t{i}" for i in range(len(v))] + [f"c{j}" for j in range(len(u))]
        edges = []
        for i, a in enumerate(v):
            edges.append((i, i + 1, a))
        off = len(v)
        for j, a in enumerate(u):
            edges.append((off + j, off + (j + 1) % len(u), a))
        return SoficPresentation(
            self.alphabet, tuple(names), tuple(edges), frozenset(range(len(names)))
        ).pruned()


def _paths(pres: SoficPresentation, n: int) -> dict[tuple[int, Word], set[int]]:
    """(start vertex, label word) -> end vertices, over all paths of length ``n``."""
    layer = {(p, ()): {p} for p in range(pres.num_vertices)}
    for _ in range(n):
        nxt: dict[tuple[int, Word], set[int]] = {}
        for (p, w), ends in layer.items():
            for q in ends:
                for a, qs in pres.transitions[q].items():
                    nxt.setdefault((p, w + (a,)), set()).update(qs)
        layer = nxt
    return layer


@dataclass(frozen=True)
class PowerShift(_Spec):
    """The ``N``-th power shift: symbols are the words of ``L_N(base)``.

    ``chunks[i - 1]`` is the base word encoded by symbol ``i``.
    """

    base: _Spec
    power: int

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("power must be >= 1")

    @functools.cached_property
    def chunks(self) -> tuple[Word, ...]:
        return tuple(enumerate_language(self.base, self.power))

    @property
    def alphabet(self) -> int:
        return len(self.chunks)

    def expand(self, w: Sequence[int]) -> Word:
        w = _check_symbols(w, self.alphabet)
        return tuple(itertools.chain.from_iterable(self.chunks[a - 1] for a in w))

    def is_admissible(self, w):
        return self.base.is_admissible(self.expand(w))

    def _build_presentation(self):
        base = compile_presentation(self.base)
        index = {c: i + 1 for i, c in enumerate(self.chunks)}
        edges = set()
        for (p, w), ends in _paths(base, self.power).items():
            if w in index:
                edges.update((p, q, index[w]) for q in ends)
        pres = SoficPresentation(self.alphabet, base.names, tuple(sorted(edges)), base.initial)
        return pres.pruned()


@dataclass(frozen=True)
class HigherBlock(_Spec):
    """The ``N``-th higher block shift: overlapping ``N``-blocks as symbols."""

    base: _Spec
    block: int

    def __post_init__(self):
        if self.block < 1:
            raise ValueError("block length must be >= 1")

    @functools.cached_property
    def chunks(self) -> tuple[Word, ...]:
        return tuple(enumerate_language(self.base, self.block))

    @property
    def alphabet(self) -> int:
        return len(self.chunks)

    def expand(self, w: Sequence[int]) -> Word | None:
        """Base word spelled by overlapping blocks, or None if they do not overlap."""
        w = _check_symbols(w, self.alphabet)
        if not w:
            return ()
        blocks = [self.chunks[a - 1] for a in w]
        for x, y in zip(blocks, blocks[1:]):
            if x[1:] != y[:-1]:
                return None
        return blocks[0] + tuple(b[-1] for b in blocks[1:])

    def encode(self, w: Sequence[int]) -> Word:
        """Recode a base word of length >= N as its sequence of N-blocks."""
        index = {c: i + 1 for i, c in enumerate(self.chunks)}
        n = self.block
        return tuple(index[tuple(w[i : i + n])] for i in range(len(w) - n + 1))

    def is_admissible(self, w):
        base_word = self.expand(w)
        return base_word is not None and self.base.is_admissible(base_word)

    def _build_presentation(self):
        base = compile_presentation(self.base)
        n = self.block
        index = {c: i + 1 for i, c in enumerate(self.chunks)}
        # vertex = (base vertex, last n-1 symbols)
        start = {}
        for (p, w), ends in _paths(base, n - 1).items():
            if p in base.initial:
                for q in ends:
                    start[(q, w)] = None
        vid: dict[tuple[int, Word], int] = {}
        names: list[str] = []
        edges = []
        todo = deque()
        for key in start:
            vid[key] = len(names)
            names.append(f"{base.names[key[0]]}|{format_word(key[1])}")
            todo.append(key)
        while todo:
            q, ctx = todo.popleft()
            for a, qs in base.transitions[q].items():
                blk = ctx + (a,)
                if blk not in index:
                    continue
                for q2 in qs:
                    key = (q2, blk[1:])
                    if key not in vid:
                        vid[key] = len(names)
                        names.append(f"{base.names[q2]}|{format_word(key[1])}")
                        todo.append(key)
                    edges.append((vid[(q, ctx)], vid[key], index[blk]))
        pres = SoficPresentation(
            self.alphabet, tuple(names), tuple(sorted(set(edges))),
            frozenset(vid[k] for k in start),
        )
        return pres.pruned()


SubshiftSpec = Union[Full, Sft, Sofic, CodedFinite, CodedTruncated, OrbitClosure, PowerShift, HigherBlock]


# ---------------------------------------------------------------------------
# Module-level operations


def is_admissible(spec: SubshiftSpec, w: Sequence[int]) -> bool:
    """True iff ``w`` belongs to the language of ``spec``."""
    return spec.is_admissible(w)


@functools.lru_cache(maxsize=256)
def compile_presentation(spec: SubshiftSpec) -> SoficPresentation:
    """Pruned labeled graph presenting ``spec``; raises EmptyShiftError if empty."""
    return spec._build_presentation()


def enumerate_language(spec: SubshiftSpec, n: int) -> list[Word]:
    """Admissible words of length ``n`` in lexicographic order."""
    if n < 0:
        raise ValueError("word length must be non-negative")
    return compile_presentation(spec).words_from(n)


def power_shift(spec: SubshiftSpec, n: int) -> PowerShift:
    return PowerShift(spec, n)


def higher_block(spec: SubshiftSpec, n: int) -> HigherBlock:
    return HigherBlock(spec, n)


@dataclass(frozen=True)
class FactorCode:
    """Sliding block code with ``memory`` and ``anticipation``.

    ``table`` maps each window of length ``memory + anticipation + 1`` to a
    target symbol.
    """

    memory: int
    anticipation: int
    table: Mapping[Word, int] = field(hash=False)

    def __post_init__(self):
        if self.memory < 0 or self.anticipation < 0:
            raise ValueError("memory and anticipation must be non-negative")
        table = {tuple(int(a) for a in k): int(v) for k, v in dict(self.table).items()}
        for k in table:
            if len(k) != self.window:
                raise ValueError(f"window {format_word(k)} has length {len(k)} != {self.window}")
        object.__setattr__(self, "table", table)

    @property
    def window(self) -> int:
        return self.memory + self.anticipation + 1

    def check_total(self, spec: SubshiftSpec) -> list[Word]:
        """Admissible windows of ``spec`` missing from the table."""
        return [w for w in enumerate_language(spec, self.window) if w not in self.table]

    def lift(self, spec: SubshiftSpec) -> tuple[HigherBlock, "FactorCode"]:
        """Equivalent 1-block code on the higher block shift of ``spec``."""
        hb = HigherBlock(spec, self.window)
        missing = self.check_total(spec)
        if missing:
            raise BlockMapDomainError(f"window {format_word(missing[0])} not in block map")
        table = {(i + 1,): self.table[c] for i, c in enumerate(hb.chunks)}
        return hb, FactorCode(0, 0, table)


def apply_block_map(code: FactorCode, w: Sequence[int]) -> Word:
    """Slide the block map over ``w``; result has length ``len(w) - m - n``."""
    w = tuple(w)
    n = code.window
    if len(w) < n:
        raise ValueError(f"word of length {len(w)} shorter than window {n}")
    out = []
    for i in range(len(w) - n + 1):
        win = w[i : i + n]
        try:
            out.append(code.table[win])
        except KeyError:
            raise BlockMapDomainError(f"window {format_word(win)} not in block map") from None
    return tuple(out)
