"""Finite product grids, quadrature and dyadic product geometry.

Cells are indexed ``0 .. n-1`` on each axis; cell ``k`` of an axis occupies
``[origin + k*h, origin + (k+1)*h)`` and its centre is the sample point.
Dyadic interval ``(level, index)`` covers ``n / 2**level`` consecutive cells.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

BOUNDARIES = ("dirichlet", "periodic")


def _log2_exact(n: int) -> int:
    k = int(n).bit_length() - 1
    if n <= 0 or (1 << k) != n:
        raise ValueError(f"n_cells must be a power of two, got {n}")
    return k


@dataclass(frozen=True)
class Axis:
    n_cells: int
    h: float = 1.0
    origin: float = 0.0
    boundary: str = "dirichlet"

    def __post_init__(self):
        k = _log2_exact(self.n_cells)
        if k < 2:
            raise ValueError("grid too small: need n_cells >= 4")
        if not self.h > 0:
            raise ValueError("spacing h must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def levels(self) -> int:
        """Finest dyadic level (intervals of one cell)."""
        return _log2_exact(self.n_cells)

    @property
    def length(self) -> float:
        return self.n_cells * self.h

    @cached_property
    def centers(self) -> np.ndarray:
        return self.origin + (np.arange(self.n_cells) + 0.5) * self.h


@dataclass(frozen=True)
class GridFunction:
    axis1: Axis
    axis2: Axis
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.axis1.n_cells, self.axis2.n_cells):
            raise ValueError(
                f"values shape {v.shape} does not match grid "
                f"({self.axis1.n_cells}, {self.axis2.n_cells})")
        object.__setattr__(self, "values", v)

    @property
    def cell_area(self) -> float:
        return self.axis1.h * self.axis2.h

    def like(self, values) -> "GridFunction":
        return GridFunction(self.axis1, self.axis2, values)

    def __add__(self, other):
        return self.like(self.values + other.values)

    def __sub__(self, other):
        return self.like(self.values - other.values)

    def __mul__(self, alpha):
        return self.like(alpha * self.values)

    __rmul__ = __mul__

    def inner(self, other) -> complex:
        return np.sum(self.values * np.conj(other.values)) * self.cell_area

    def norm(self, p: float = 2.0) -> float:
        return lp_norm(self, p)

    @classmethod
    def zeros(cls, axis1: Axis, axis2: Axis) -> "GridFunction":
        return cls(axis1, axis2, np.zeros((axis1.n_cells, axis2.n_cells)))

    @classmethod
    def from_callable(cls, axis1: Axis, axis2: Axis, fn) -> "GridFunction":
        x1, x2 = np.meshgrid(axis1.centers, axis2.centers, indexing="ij")
        return cls(axis1, axis2, np.asarray(fn(x1, x2), dtype=float))


def lp_array(values: np.ndarray, p: float, cell_area: float) -> float:
    """Quadrature L^p norm of a sampled array with constant cell weight."""
    v = np.asarray(values)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite sample")
    if not p >= 1:
        raise ValueError("p must lie in [1, inf]")
    a = np.abs(v)
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    if p == 1:
        return float(a.sum() * cell_area)
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * cell_area))
    return float((np.sum(a ** p) * cell_area) ** (1.0 / p))


def lp_norm(f: GridFunction, p: float) -> float:
    """(sum |f|^p h1 h2)^(1/p); max |f| for p = inf."""
    return lp_array(f.values, p, f.cell_area)


# ---------------------------------------------------------------- dyadic types

@dataclass(frozen=True, order=True)
class DyadicInterval:
    level: int
    index: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.index < (1 << self.level):
            raise ValueError(f"invalid dyadic interval {self}")

    def cell_range(self, n_cells: int) -> tuple[int, int]:
        w = n_cells >> self.level
        return self.index * w, (self.index + 1) * w

    def n_cells(self, n_total: int) -> int:
        return n_total >> self.level

    def side(self, axis: Axis) -> float:
        return (axis.n_cells >> self.level) * axis.h

    def parent(self) -> "DyadicInterval | None":
        if self.level == 0:
            return None
        return DyadicInterval(self.level - 1, self.index >> 1)

    def contains(self, other: "DyadicInterval") -> bool:
        if other.level < self.level:
            return False
        return (other.index >> (other.level - self.level)) == self.index

    def dilate_range(self, n_cells: int, factor: float) -> tuple[int, int]:
        """Cells lying inside the concentric ``factor``-dilate, clipped."""
        a, b = self.cell_range(n_cells)
        c, half = 0.5 * (a + b), 0.5 * factor * (b - a)
        lo = int(np.ceil(c - half - 1e-9))
        hi = int(np.floor(c + half + 1e-9))
        return max(lo, 0), min(hi, n_cells)


@dataclass(frozen=True, order=True)
class DyadicRectangle:
    i1: DyadicInterval
    i2: DyadicInterval

    @classmethod
    def of(cls, level1, index1, level2, index2) -> "DyadicRectangle":
        return cls(DyadicInterval(level1, index1), DyadicInterval(level2, index2))

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.i1.level, self.i1.index, self.i2.level, self.i2.index)

    def area(self, axis1: Axis, axis2: Axis) -> float:
        return self.i1.side(axis1) * self.i2.side(axis2)

    def slices(self, shape) -> tuple[slice, slice]:
        a1, b1 = self.i1.cell_range(shape[0])
        a2, b2 = self.i2.cell_range(shape[1])
        return slice(a1, b1), slice(a2, b2)

    def dilate_slices(self, shape, factor: float) -> tuple[slice, slice]:
        a1, b1 = self.i1.dilate_range(shape[0], factor)
        a2, b2 = self.i2.dilate_range(shape[1], factor)
        return slice(a1, b1), slice(a2, b2)

    def mask(self, shape) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        m[self.slices(shape)] = True
        return m

    def dilate_mask(self, shape, factor: float, buffer: int = 0) -> np.ndarray:
        s1, s2 = self.dilate_slices(shape, factor)
        m = np.zeros(shape, dtype=bool)
        m[max(s1.start - buffer, 0):s1.stop + buffer,
          max(s2.start - buffer, 0):s2.stop + buffer] = True
        return m

    def contains(self, other: "DyadicRectangle") -> bool:
        return self.i1.contains(other.i1) and self.i2.contains(other.i2)


@dataclass(frozen=True)
class OpenSet:
    axis1: Axis
    axis2: Axis
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (self.axis1.n_cells, self.axis2.n_cells):
            raise ValueError("mask shape does not match grid")
        object.__setattr__(self, "mask", m)

    @property
    def shape(self):
        return self.mask.shape

    @property
    def measure(self) -> float:
        return float(self.mask.sum()) * self.axis1.h * self.axis2.h

    def is_empty(self) -> bool:
        return not self.mask.any()

    def __contains__(self, rect: DyadicRectangle) -> bool:
        return bool(self.mask[rect.slices(self.shape)].all())

    def issubset(self, other: "OpenSet") -> bool:
        return bool(np.all(~self.mask | other.mask))

    def to_rle(self) -> str:
        """Row-major run lengths, first run counts ``False`` cells."""
        flat = self.mask.ravel()
        change = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
        bounds = np.concatenate(([0], change, [flat.size]))
        runs = np.diff(bounds).tolist()
        if flat.size and flat[0]:
            runs = [0] + runs
        n1, n2 = self.shape
        return f"{n1}x{n2}:" + ",".join(str(r) for r in runs)

    @classmethod
    def from_rle(cls, axis1: Axis, axis2: Axis, text: str) -> "OpenSet":
        head, _, body = text.partition(":")
        n1, n2 = (int(s) for s in head.split("x"))
        if (n1, n2) != (axis1.n_cells, axis2.n_cells):
            raise ValueError("RLE header does not match axes")
        runs = [int(r) for r in body.split(",")] if body else []
        flat = np.zeros(n1 * n2, dtype=bool)
        pos, val = 0, False
        for r in runs:
            flat[pos:pos + r] = val
            pos += r
            val = not val
        if pos != n1 * n2:
            raise ValueError("RLE runs do not cover the grid")
        return cls(axis1, axis2, flat.reshape(n1, n2))


@dataclass(frozen=True)
class ScaleGrid:
    """Geometric scale sample ``t_min * 2**(k / per_octave)`` with dt/t weights."""

    t_min: float
    t_max: float
    per_octave: int = 8

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max):
            raise ValueError("need 0 < t_min < t_max")
        if self.per_octave < 1:
            raise ValueError("per_octave must be positive")

    @classmethod
    def for_axis(cls, axis: Axis, per_octave: int = 8, t_min=None, t_max=None):
        return cls(axis.h / 2 if t_min is None else t_min,
                   axis.length if t_max is None else t_max, per_octave)

    @cached_property
    def values(self) -> np.ndarray:
        k = int(np.ceil(self.per_octave * np.log2(self.t_max / self.t_min) - 1e-9))
        return self.t_min * 2.0 ** (np.arange(k + 1) / self.per_octave)

    @property
    def log_step(self) -> float:
        """Weight of each point in the measure dt/t."""
        return np.log(2.0) / self.per_octave

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.values.size, self.log_step)

    def __len__(self):
        return self.values.size


# ----------------------------------------------------------- dyadic machinery

def _block_reduce(a: np.ndarray, l1: int, l2: int, op) -> np.ndarray:
    n1, n2 = a.shape
    return op(a.reshape(1 << l1, n1 >> l1, 1 << l2, n2 >> l2), axis=(1, 3))


def _expand(blocks: np.ndarray, shape) -> np.ndarray:
    b1, b2 = blocks.shape
    n1, n2 = shape
    return np.broadcast_to(blocks[:, None, :, None],
                           (b1, n1 // b1, b2, n2 // b2)).reshape(n1, n2)


def contained_table(mask: np.ndarray) -> dict[tuple[int, int], np.ndarray]:
    """For every level pair, which dyadic rectangles lie inside ``mask``."""
    K1 = _log2_exact(mask.shape[0])
    K2 = _log2_exact(mask.shape[1])
    return {(l1, l2): _block_reduce(mask, l1, l2, np.all)
            for l1 in range(K1 + 1) for l2 in range(K2 + 1)}


def _parent_inside(table, l1, l2, direction):
    """Whether the parent (doubling along ``direction``) of each rectangle is inside."""
    if direction == 1:
        if l1 == 0:
            return np.zeros((1, 1 << l2), dtype=bool)
        return np.repeat(table[(l1 - 1, l2)], 2, axis=0)
    if l2 == 0:
        return np.zeros((1 << l1, 1), dtype=bool)
    return np.repeat(table[(l1, l2 - 1)], 2, axis=1)


def _rect_list(selected: dict) -> list[DyadicRectangle]:
    out = []
    for (l1, l2), sel in selected.items():
        for i1, i2 in zip(*np.nonzero(sel)):
            out.append(DyadicRectangle.of(l1, int(i1), l2, int(i2)))
    out.sort()
    return out


def _require_nonempty(omega: OpenSet):
    if omega.is_empty():
        raise ValueError("empty open set")


def maximal_dyadic_subrectangles(omega: OpenSet) -> list[DyadicRectangle]:
    """m(Omega): dyadic rectangles inside Omega with neither parent inside."""
    _require_nonempty(omega)
    table = contained_table(omega.mask)
    sel = {}
    for (l1, l2), inside in table.items():
        sel[(l1, l2)] = (inside & ~_parent_inside(table, l1, l2, 1)
                         & ~_parent_inside(table, l1, l2, 2))
    return _rect_list(sel)


def maximal_in_direction(omega: OpenSet, direction: int) -> list[DyadicRectangle]:
    """m_1(Omega) or m_2(Omega): rectangles whose side along ``direction`` cannot grow."""
    if direction not in (1, 2):
        raise ValueError("direction must be 1 or 2")
    _require_nonempty(omega)
    table = contained_table(omega.mask)
    sel = {k: inside & ~_parent_inside(table, *k, direction)
           for k, inside in table.items()}
    return _rect_list(sel)


def strong_maximal(g: GridFunction | np.ndarray) -> GridFunction | np.ndarray:
    """Dyadic strong maximal function: max of rectangle averages over R containing x."""
    values = g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)
    if np.any(values < 0):
        raise ValueError("strong_maximal requires a non-negative input")
    K1 = _log2_exact(values.shape[0])
    K2 = _log2_exact(values.shape[1])
    out = np.zeros_like(values, dtype=float)
    for l1 in range(K1 + 1):
        for l2 in range(K2 + 1):
            avg = _block_reduce(values, l1, l2, np.mean)
            np.maximum(out, _expand(avg, values.shape), out=out)
    return g.like(out) if isinstance(g, GridFunction) else out


def enlarge(omega: OpenSet, threshold: float = 0.5) -> OpenSet:
    """{x : M_s(1_Omega)(x) > threshold} (exact integer arithmetic on counts)."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    _require_nonempty(omega)
    m = omega.mask.astype(np.int64)
    n1, n2 = m.shape
    K1, K2 = _log2_exact(n1), _log2_exact(n2)
    out = np.zeros(m.shape, dtype=bool)
    for l1 in range(K1 + 1):
        for l2 in range(K2 + 1):
            size = (n1 >> l1) * (n2 >> l2)
            hit = _block_reduce(m, l1, l2, np.sum) > threshold * size
            out |= _expand(hit, m.shape)
    return OpenSet(omega.axis1, omega.axis2, out)


def _stretch_exponents(table, direction: int, K1: int, K2: int):
    """Exponent e with gamma = 2**e for every rectangle, relative to ``table``.

    e(R) counts how many times R can be doubled along ``direction`` while
    staying inside the set described by ``table``.
    """
    e = {}
    if direction == 1:
        for l2 in range(K2 + 1):
            e[(0, l2)] = np.zeros((1, 1 << l2), dtype=np.int64)
            for l1 in range(1, K1 + 1):
                ok = np.repeat(table[(l1 - 1, l2)], 2, axis=0)
                e[(l1, l2)] = np.where(ok, 1 + np.repeat(e[(l1 - 1, l2)], 2, axis=0), 0)
    else:
        for l1 in range(K1 + 1):
            e[(l1, 0)] = np.zeros((1 << l1, 1), dtype=np.int64)
            for l2 in range(1, K2 + 1):
                ok = np.repeat(table[(l1, l2 - 1)], 2, axis=1)
                e[(l1, l2)] = np.where(ok, 1 + np.repeat(e[(l1, l2 - 1)], 2, axis=1), 0)
    return e


def journe_gamma(rect: DyadicRectangle, omega: OpenSet, direction: int,
                 enlarged: OpenSet | None = None) -> float:
    """gamma_1 (or gamma_2): widest dyadic stretch of R inside the enlargement of Omega."""
    if direction not in (1, 2):
        raise ValueError("direction must be 1 or 2")
    if rect not in omega:
        raise ValueError("rectangle is not contained in the open set")
    big = enlarge(omega, 0.5) if enlarged is None else enlarged
    cur = rect
    while True:
        if direction == 1:
            par = cur.i1.parent()
            nxt = None if par is None else DyadicRectangle(par, cur.i2)
        else:
            par = cur.i2.parent()
            nxt = None if par is None else DyadicRectangle(cur.i1, par)
        if nxt is None or nxt not in big:
            break
        cur = nxt
    if direction == 1:
        return 2.0 ** (rect.i1.level - cur.i1.level)
    return 2.0 ** (rect.i2.level - cur.i2.level)


def journe_lift(rect: DyadicRectangle, omega: OpenSet,
                enlarged: OpenSet | None = None,
                enlarged_twice: OpenSet | None = None) -> tuple[DyadicRectangle, DyadicRectangle]:
    """The l x J and l x Q rectangles attached to R in the two-stage enlargement.

    l is the largest dyadic interval containing I with l x J inside the
    enlargement of Omega; Q the largest containing J with l x Q inside the
    enlargement of that enlargement.
    """
    big = enlarge(omega, 0.5) if enlarged is None else enlarged
    bigger = enlarge(big, 0.5) if enlarged_twice is None else enlarged_twice
    g1 = journe_gamma(rect, omega, 1, enlarged=big)
    l = DyadicInterval(rect.i1.level - int(round(np.log2(g1))),
                       rect.i1.index >> int(round(np.log2(g1))))
    lj = DyadicRectangle(l, rect.i2)
    cur = lj
    while True:
        par = cur.i2.parent()
        if par is None or DyadicRectangle(l, par) not in bigger:
            break
        cur = DyadicRectangle(l, par)
    return lj, cur


def journe_sum(omega: OpenSet, delta: float) -> tuple[float, float]:
    """(sum over m_2 of |R| gamma_1^-delta, sum over m_1 of |R| gamma_2^-delta)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    _require_nonempty(omega)
    big = enlarge(omega, 0.5)
    table = contained_table(omega.mask)
    big_table = contained_table(big.mask)
    n1, n2 = omega.shape
    K1, K2 = _log2_exact(n1), _log2_exact(n2)
    e1 = _stretch_exponents(big_table, 1, K1, K2)
    e2 = _stretch_exponents(big_table, 2, K1, K2)
    h1, h2 = omega.axis1.h, omega.axis2.h
    s1 = s2 = 0.0
    # fixed (l1, l2) order keeps the reduction deterministic
    for l1 in range(K1 + 1):
        for l2 in range(K2 + 1):
            inside = table[(l1, l2)]
            area = (n1 >> l1) * h1 * (n2 >> l2) * h2
            in_m2 = inside & ~_parent_inside(table, l1, l2, 2)
            in_m1 = inside & ~_parent_inside(table, l1, l2, 1)
            s1 += area * float(np.sum(2.0 ** (-delta * e1[(l1, l2)][in_m2])))
            s2 += area * float(np.sum(2.0 ** (-delta * e2[(l1, l2)][in_m1])))
    return s1, s2


def all_dyadic_rectangles(shape) -> list[DyadicRectangle]:
    K1, K2 = _log2_exact(shape[0]), _log2_exact(shape[1])
    return [DyadicRectangle.of(l1, i1, l2, i2)
            for l1 in range(K1 + 1) for i1 in range(1 << l1)
            for l2 in range(K2 + 1) for i2 in range(1 << l2)]


def random_open_set(axis1: Axis, axis2: Axis, rng: np.random.Generator,
                    n_rects: int | None = None, max_side: float = 0.5) -> OpenSet:
    """Union of a few random axis-parallel rectangles placed in physical coordinates.

    Placement is in domain-relative coordinates, so the same generator state
    yields the same continuum set on every resolution.
    """
    k = int(rng.integers(1, 6)) if n_rects is None else n_rects
    x1 = (axis1.centers - axis1.origin) / axis1.length
    x2 = (axis2.centers - axis2.origin) / axis2.length
    mask = np.zeros((axis1.n_cells, axis2.n_cells), dtype=bool)
    for _ in range(k):
        w1, w2 = rng.uniform(0.05, max_side, size=2)
        c1, c2 = rng.uniform(0, 1, size=2)
        in1 = np.abs(x1 - c1) < w1 / 2
        in2 = np.abs(x2 - c2) < w2 / 2
        mask |= in1[:, None] & in2[None, :]
    if not mask.any():
        i1 = min(int(c1 * axis1.n_cells), axis1.n_cells - 1)
        i2 = min(int(c2 * axis2.n_cells), axis2.n_cells - 1)
        mask[i1, i2] = True
    return OpenSet(axis1, axis2, mask)
