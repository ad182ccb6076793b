"""Affine contractions on a box, word composition and fixed points."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .symbolic import SubshiftSpec, compile_presentation, _check_symbols

__all__ = [
    "NotAContractionError",
    "BoxInvarianceError",
    "Box",
    "ContractionMap",
    "MapFamily",
    "IfsSystem",
    "certify_ratio",
    "compose_word",
    "fixed_point",
]

_POWER_TOL = 1e-10
_MARGIN = 1e-9


class NotAContractionError(ValueError):
    pass


class BoxInvarianceError(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must have equal positive length")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError("box needs lo < hi on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, d: int = 1) -> "Box":
        return cls((0.0,) * d, (1.0,) * d)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diam(self) -> float:
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    def corners(self) -> np.ndarray:
        return np.array(list(itertools.product(*zip(self.lo, self.hi))), dtype=float)

    def contains(self, pts, slack: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.all((pts >= np.array(self.lo) - slack) & (pts <= np.array(self.hi) + slack), axis=1)


def certify_ratio(A) -> float:
    """Upper bound on the operator 2-norm of ``A``; raises if not < 1.

    Power iteration on ``A^T A`` until the Rayleigh quotient settles to 1e-10,
    then a relative margin of 1e-9.  Falls back to the SVD if the iteration
    does not settle.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    M = A.T @ A
    d = M.shape[0]
    if not np.any(M):
        return 0.0
    v = np.ones(d) / np.sqrt(d) + np.linspace(0.0, 1e-3, d)
    v /= np.linalg.norm(v)
    lam = 0.0
    converged = False
    for _ in range(10000):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the kernel; restart on a random direction
            v = np.random.default_rng(0).standard_normal(d)
            v /= np.linalg.norm(v)
            continue
        new = float(v @ w)
        v = w / nw
        if abs(new - lam) <= _POWER_TOL * max(new, 1e-300):
            lam = new
            converged = True
            break
        lam = new
    norm = np.sqrt(lam) if converged else float(np.linalg.svd(A, compute_uv=False)[0])
    # power iteration converges from below; guard with the exact value
    if d <= 64:
        norm = max(norm, float(np.linalg.svd(A, compute_uv=False)[0]))
    bound = norm * (1.0 + _MARGIN)
    if bound >= 1.0:
        raise NotAContractionError(f"operator norm bound {bound:.6g} is not < 1")
    return bound


@dataclass(frozen=True, eq=False)
class ContractionMap:
    """``x -> A x + b`` with a certified 2-norm ratio."""

    matrix: np.ndarray
    offset: np.ndarray
    ratio: float = field(default=-1.0)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.matrix, dtype=float)).copy()
        b = np.atleast_1d(np.asarray(self.offset, dtype=float)).copy()
        if A.shape != (b.size, b.size):
            raise ValueError(f"matrix shape {A.shape} does not match offset length {b.size}")
        A.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "offset", b)
        if self.ratio < 0:
            object.__setattr__(self, "ratio", certify_ratio(A))
        elif self.ratio >= 1:
            raise NotAContractionError(f"ratio {self.ratio} is not < 1")

    @classmethod
    def scalar(cls, a: float, b: float) -> "ContractionMap":
        return cls(np.array([[a]]), np.array([b]))

    @property
    def dim(self) -> int:
        return self.offset.size

    @property
    def invertible(self) -> bool:
        return abs(float(np.linalg.det(self.matrix))) > 1e-12

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Apply to one point (shape ``(d,)``) or a batch (shape ``(m, d)``)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape[-1] != self.dim:
            raise ValueError(f"point dimension {x.shape[-1]} != map dimension {self.dim}")
        return x @ self.matrix.T + self.offset

    def maps_box_into(self, box: Box, tol: float = 1e-12) -> bool:
        img = self.eval(box.corners())
        return bool(np.all(box.contains(img, slack=tol * max(box.diam, 1.0))))

    def __eq__(self, other):
        if not isinstance(other, ContractionMap):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix) and np.array_equal(self.offset, other.offset)

    def __hash__(self):
        return hash((self.matrix.tobytes(), self.offset.tobytes()))

    def __repr__(self):
        if self.dim == 1:
            return f"ContractionMap(a={self.matrix[0, 0]!r}, b={self.offset[0]!r})"
        return f"ContractionMap(matrix={self.matrix.tolist()!r}, offset={self.offset.tolist()!r})"


def fixed_point(f: ContractionMap) -> np.ndarray:
    """Unique fixed point, from ``(I - A) x = b``."""
    M = np.eye(f.dim) - f.matrix
    if np.linalg.cond(M) > 1e12:
        raise np.linalg.LinAlgError("I - A is numerically singular")
    x = np.linalg.solve(M, f.offset)
    # one step of iterative refinement
    r = f.offset - M @ x
    return x + np.linalg.solve(M, r)


class MapFamily(tuple):
    """Maps ``f_1..f_k``; index with the symbol via :meth:`of`."""

    def __new__(cls, maps: Sequence[ContractionMap]):
        maps = tuple(maps)
        if not maps:
            raise ValueError("map family is empty")
        d = maps[0].dim
        if any(m.dim != d for m in maps):
            raise ValueError("all maps must share one dimension")
        return super().__new__(cls, maps)

    @property
    def dim(self) -> int:
        return self[0].dim

    def of(self, a: int) -> ContractionMap:
        if not 1 <= a <= len(self):
            raise ValueError(f"symbol {a} outside 1..{len(self)}")
        return self[a - 1]

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(m.ratio for m in self)


def compose_word(family: Sequence[ContractionMap], u: Sequence[int]) -> ContractionMap:
    """``f_u = f_{u_n} ∘ ... ∘ f_{u_1}``; ``u_1`` is applied first."""
    u = tuple(u)
    if not u:
        raise ValueError("empty word gives the identity, which is not a contraction")
    _check_symbols(u, len(family))
    A = family[u[0] - 1].matrix.copy()
    b = family[u[0] - 1].offset.copy()
    r = family[u[0] - 1].ratio
    for a in u[1:]:
        g = family[a - 1]
        A = g.matrix @ A
        b = g.matrix @ b + g.offset
        r *= g.ratio
    if len(u) > 1:
        r = min(r * (1 + _MARGIN), float(np.nextafter(1.0, 0.0)))
    return ContractionMap(A, b, ratio=r)


@dataclass(frozen=True, eq=False)
class IfsSystem:
    """Ambient box, maps indexed by symbols and a sub-shift constraining words."""

    box: Box
    maps: MapFamily
    shift: SubshiftSpec
    totally_invariant: bool = False
    declared_rooted_in_fixed_point: bool = False
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.maps, MapFamily):
            object.__setattr__(self, "maps", MapFamily(self.maps))
        if len(self.maps) != self.shift.alphabet:
            raise ValueError(
                f"{len(self.maps)} maps for an alphabet of size {self.shift.alphabet}"
            )
        if self.maps.dim != self.box.dim:
            raise ValueError("map dimension differs from box dimension")
        for i, m in enumerate(self.maps, 1):
            if not m.maps_box_into(self.box):
                raise BoxInvarianceError(f"map {i} does not send the box into itself")

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def presentation(self):
        return compile_presentation(self.shift)

    def compose(self, u: Sequence[int]) -> ContractionMap:
        return compose_word(self.maps, u)

    def with_shift(self, shift: SubshiftSpec, maps=None) -> "IfsSystem":
        return IfsSystem(
            self.box,
            MapFamily(maps) if maps is not None else self.maps,
            shift,
            self.totally_invariant,
            self.declared_rooted_in_fixed_point,
            self.name,
        )
