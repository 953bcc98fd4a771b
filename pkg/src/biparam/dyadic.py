"""Shifted dyadic grids with exact rational endpoints.

The unshifted grid D^0 consists of the intervals 2^k [j, j+1).  The shifted
grid D^delta translates each interval of length 2^k by

    delta_I = delta                        k <= 0
    delta_I = delta + (2^k - 1)/3          k > 0 even
    delta_I = delta + (2^(k+1) - 1)/3      k > 0 odd

The extra offsets are integers, so the shifted grid still nests exactly.
Endpoints are `Fraction`s; floats only appear when realizing for geometry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .geometry import Rect

DEFAULT_DELTA = Fraction(1, 3)
MAX_SCALE = 30
MAX_ENUMERATION = 10**8


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(float(x))


def check_delta(delta) -> Fraction:
    d = as_fraction(delta)
    if not (0 < d < Fraction(1, 2)):
        raise ValueError(f"delta must lie in (0, 1/2), got {d}")
    return d


def shift_of(k: int, delta=DEFAULT_DELTA) -> Fraction:
    """The translation delta_I for intervals of length 2^k in D^delta."""
    d = as_fraction(delta)
    if k <= 0:
        return d
    if k % 2 == 0:
        return d + Fraction(2**k - 1, 3)
    return d + Fraction(2 ** (k + 1) - 1, 3)


def _offset(shift: Fraction, k: int) -> Fraction:
    return Fraction(0) if shift == 0 else shift_of(k, shift)


def _pow2(k: int) -> Fraction:
    return Fraction(2**k) if k >= 0 else Fraction(1, 2 ** (-k))


@dataclass(frozen=True)
class GridId:
    """Which of the two grids is used on each axis (shift 0 or delta)."""

    sx: Fraction = Fraction(0)
    sy: Fraction = Fraction(0)

    def __post_init__(self):
        for s in (self.sx, self.sy):
            if s != 0:
                check_delta(s)

    @classmethod
    def of(cls, ax: bool, ay: bool, delta=DEFAULT_DELTA) -> "GridId":
        d = check_delta(delta)
        return cls(d if ax else Fraction(0), d if ay else Fraction(0))

    @classmethod
    def all(cls, delta=DEFAULT_DELTA):
        return [cls.of(a, b, delta) for a in (False, True) for b in (False, True)]

    @property
    def label(self) -> str:
        return f"{self.sx},{self.sy}"

    @classmethod
    def from_label(cls, text: str) -> "GridId":
        a, b = text.split(",")
        return cls(Fraction(a), Fraction(b))


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The interval offset(k) + 2^k [j, j+1) of the grid with the given shift."""

    k: int
    j: int
    shift: Fraction = Fraction(0)

    @property
    def length(self) -> Fraction:
        return _pow2(self.k)

    def realize(self) -> tuple[Fraction, Fraction]:
        a = _offset(self.shift, self.k) + _pow2(self.k) * self.j
        return a, a + _pow2(self.k)

    def bounds(self) -> tuple[float, float]:
        a, b = self.realize()
        return float(a), float(b)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        a, b = self.realize()
        k = self.k - 1
        # index of the child starting at a
        j = (a - _offset(self.shift, k)) / _pow2(k)
        if j.denominator != 1:
            raise AssertionError(f"grid nesting violated at {self}")
        left = DyadicInterval(k, int(j), self.shift)
        right = DyadicInterval(k, int(j) + 1, self.shift)
        if left.realize()[0] != a or right.realize()[1] != b:
            raise AssertionError(f"grid nesting violated at {self}")
        return left, right

    def parent(self) -> "DyadicInterval":
        a, _ = self.realize()
        k = self.k + 1
        j = math.floor((a - _offset(self.shift, k)) / _pow2(k))
        return DyadicInterval(k, j, self.shift)

    def contains(self, other: "DyadicInterval") -> bool:
        a, b = self.realize()
        c, d = other.realize()
        return a <= c and d <= b

    def overlaps(self, other: "DyadicInterval") -> bool:
        a, b = self.realize()
        c, d = other.realize()
        return max(a, c) < min(b, d)

    def contains_point(self, x) -> bool:
        a, b = self.realize()
        x = as_fraction(x)
        return a <= x < b


def locate(x, k: int, shift=Fraction(0)) -> DyadicInterval:
    """The grid interval of scale k containing the point x."""
    shift = as_fraction(shift)
    x = as_fraction(x)
    j = math.floor((x - _offset(shift, k)) / _pow2(k))
    return DyadicInterval(k, j, shift)


@dataclass(frozen=True, order=True)
class DyadicRectangle:
    ix: DyadicInterval
    iy: DyadicInterval

    @property
    def grid(self) -> GridId:
        return GridId(self.ix.shift, self.iy.shift)

    def realize(self):
        return self.ix.realize(), self.iy.realize()

    def rect(self) -> Rect:
        x0, x1 = self.ix.bounds()
        y0, y1 = self.iy.bounds()
        return Rect(x0, y0, x1 - x0, y1 - y0)

    @property
    def area(self) -> Fraction:
        return self.ix.length * self.iy.length

    def eccentricity(self) -> Fraction:
        return _pow2(self.iy.k - self.ix.k)

    def children(self):
        xl, xr = self.ix.children()
        yl, yr = self.iy.children()
        return (
            DyadicRectangle(xl, yl),
            DyadicRectangle(xr, yl),
            DyadicRectangle(xl, yr),
            DyadicRectangle(xr, yr),
        )

    def contains(self, other: "DyadicRectangle") -> bool:
        return self.ix.contains(other.ix) and self.iy.contains(other.iy)


def concentric_factor(a, b, I0: DyadicInterval) -> float:
    """Smallest c with realize(I0) inside the concentric dilate c*[a, b)."""
    a, b = as_fraction(a), as_fraction(b)
    c0, c1 = I0.realize()
    mid = (a + b) / 2
    half = (b - a) / 2
    return float(max(mid - c0, c1 - mid) / half)


@dataclass(frozen=True)
class Cover:
    shift: Fraction
    interval: DyadicInterval
    c: float


def cover_interval(a, b, delta=DEFAULT_DELTA, extra_scales: int = 3) -> Cover:
    """Find a grid interval I0 in D^0 or D^delta with [a,b) ⊆ I0, minimizing the
    concentric factor c of I0 relative to [a,b).  The achieved c is reported.
    """
    a, b = as_fraction(a), as_fraction(b)
    if not b > a:
        raise ValueError("empty interval")
    d = check_delta(delta)
    k0 = math.ceil(math.log2(float(b - a)))
    best = None
    for shift in (Fraction(0), d):
        for k in range(k0 - 1, k0 + extra_scales):
            I0 = locate(a, k, shift)
            lo, hi = I0.realize()
            if lo <= a and b <= hi:
                c = concentric_factor(a, b, I0)
                if best is None or c < best.c:
                    best = Cover(shift, I0, c)
                break
    if best is None:
        raise RuntimeError(f"no cover found for [{a}, {b})")
    return best


def cover_rectangle(r: Rect, delta=DEFAULT_DELTA):
    """Per-axis cover: returns (GridId, DyadicRectangle, (cx, cy))."""
    cx = cover_interval(r.x0, r.x1, delta)
    cy = cover_interval(r.y0, r.y1, delta)
    return GridId(cx.shift, cy.shift), DyadicRectangle(cx.interval, cy.interval), (cx.c, cy.c)


def index_range(lo, hi, k: int, shift=Fraction(0)) -> range:
    """Indices j of scale-k intervals meeting (lo, hi) in positive length."""
    lo, hi = as_fraction(lo), as_fraction(hi)
    off = _offset(as_fraction(shift), k)
    L = _pow2(k)
    j0 = math.floor((lo - off) / L)
    j1 = math.ceil((hi - off) / L)
    return range(j0, j1)


def enumerate_rectangles(window: Rect, grid: GridId, k1: int, k2: int) -> list[DyadicRectangle]:
    """All grid rectangles of size 2^k1 x 2^k2 meeting the window's interior."""
    if max(abs(k1), abs(k2)) > MAX_SCALE:
        raise ValueError(f"scales beyond |k| <= {MAX_SCALE}")
    rx = index_range(window.x0, window.x1, k1, grid.sx)
    ry = index_range(window.y0, window.y1, k2, grid.sy)
    if len(rx) * len(ry) > MAX_ENUMERATION:
        raise ValueError(f"enumeration of {len(rx) * len(ry)} rectangles refused")
    return [
        DyadicRectangle(DyadicInterval(k1, jx, grid.sx), DyadicInterval(k2, jy, grid.sy))
        for jx in rx
        for jy in ry
    ]


def iter_subrectangles(K0: DyadicRectangle, k1: int, k2: int) -> Iterator[DyadicRectangle]:
    """Grid rectangles of size 2^k1 x 2^k2 contained in K0 (same grid)."""
    (ax, bx), (ay, by) = K0.realize()
    for jx in index_range(ax, bx, k1, K0.ix.shift):
        I = DyadicInterval(k1, jx, K0.ix.shift)
        if not K0.ix.contains(I):
            continue
        for jy in index_range(ay, by, k2, K0.iy.shift):
            J = DyadicInterval(k2, jy, K0.iy.shift)
            if K0.iy.contains(J):
                yield DyadicRectangle(I, J)
