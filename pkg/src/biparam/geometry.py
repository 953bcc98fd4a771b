"""Planar geometry for axis-parallel and rotated rectangles.

Polygons are kept as tuples of (x, y) floats in counterclockwise order.
Clipping is Sutherland-Hodgman against one half-plane at a time, which is
all that convex-by-convex intersection needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

CLIP_TOL = 1e-12


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def as_tuple(self):
        return (self.x, self.y)


def rotate(p, theta: float) -> Point:
    """Apply the counterclockwise rotation by `theta` to a point."""
    x, y = (p.x, p.y) if isinstance(p, Point) else p
    c, s = math.cos(theta), math.sin(theta)
    return Point(x * c - y * s, x * s + y * c)


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Rect:
    """Axis-parallel rectangle [x0, x0+w] x [y0, y0+h]."""

    x0: float
    y0: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"degenerate rectangle w={self.w}, h={self.h}")

    @property
    def x1(self):
        return self.x0 + self.w

    @property
    def y1(self):
        return self.y0 + self.h

    @property
    def area(self):
        return self.w * self.h

    @property
    def center(self):
        return (self.x0 + 0.5 * self.w, self.y0 + 0.5 * self.h)

    def eccentricity(self) -> float:
        return self.h / self.w

    def corners(self):
        return (
            (self.x0, self.y0),
            (self.x1, self.y0),
            (self.x1, self.y1),
            (self.x0, self.y1),
        )

    def polygon(self) -> "ConvexPolygon":
        return ConvexPolygon(self.corners())

    def contains_point(self, p, tol: float = 0.0) -> bool:
        x, y = (p.x, p.y) if isinstance(p, Point) else p
        return (self.x0 - tol <= x <= self.x1 + tol) and (self.y0 - tol <= y <= self.y1 + tol)

    def contains_rect(self, other: "Rect", tol: float = 0.0) -> bool:
        return (
            self.x0 - tol <= other.x0
            and other.x1 <= self.x1 + tol
            and self.y0 - tol <= other.y0
            and other.y1 <= self.y1 + tol
        )

    def dilate(self, lam: float) -> "Rect":
        """Concentric dilation lam*R."""
        cx, cy = self.center
        return Rect(cx - 0.5 * lam * self.w, cy - 0.5 * lam * self.h, lam * self.w, lam * self.h)

    def quadrants(self):
        """Children as (rect, sign) with the tensor Haar sign pattern.

        Order is (left,bottom), (right,bottom), (left,top), (right,top);
        h_I(x) h_J(y) is + on left/bottom and right/top.
        """
        hw, hh = 0.5 * self.w, 0.5 * self.h
        return (
            (Rect(self.x0, self.y0, hw, hh), 1.0),
            (Rect(self.x0 + hw, self.y0, hw, hh), -1.0),
            (Rect(self.x0, self.y0 + hh, hw, hh), -1.0),
            (Rect(self.x0 + hw, self.y0 + hh, hw, hh), 1.0),
        )


@dataclass(frozen=True)
class RotatedRect:
    """The image of `base` under the rotation by `theta` about the origin."""

    base: Rect
    theta: float

    def corners(self):
        c, s = math.cos(self.theta), math.sin(self.theta)
        return tuple((x * c - y * s, x * s + y * c) for x, y in self.base.corners())

    def polygon(self) -> "ConvexPolygon":
        pts = self.corners()
        # a rotation keeps orientation, so the order stays counterclockwise
        return ConvexPolygon(pts)

    @property
    def area(self):
        return self.base.area


class ConvexPolygon:
    """Convex polygon with counterclockwise vertices; may be empty."""

    __slots__ = ("vertices",)

    def __init__(self, vertices: Iterable):
        pts = []
        for v in vertices:
            x, y = (v.x, v.y) if isinstance(v, Point) else v
            if pts and abs(pts[-1][0] - x) <= CLIP_TOL and abs(pts[-1][1] - y) <= CLIP_TOL:
                continue
            pts.append((float(x), float(y)))
        if len(pts) > 1 and abs(pts[0][0] - pts[-1][0]) <= CLIP_TOL and abs(pts[0][1] - pts[-1][1]) <= CLIP_TOL:
            pts.pop()
        self.vertices = tuple(pts)

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"ConvexPolygon({list(self.vertices)!r})"

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) < 3

    def signed_area(self) -> float:
        return shoelace(self.vertices)

    def area(self) -> float:
        if self.is_empty:
            return 0.0
        return max(shoelace(self.vertices), 0.0)

    def clip(self, normal, offset: float) -> "ConvexPolygon":
        return ConvexPolygon(clip_vertices(self.vertices, normal[0], normal[1], offset))


def shoelace(pts: Sequence) -> float:
    n = len(pts)
    if n < 3:
        return 0.0
    acc = 0.0
    x0, y0 = pts[-1]
    for x1, y1 in pts:
        acc += x0 * y1 - x1 * y0
        x0, y0 = x1, y1
    return 0.5 * acc


def clip_vertices(pts: Sequence, nx: float, ny: float, offset: float) -> list:
    """Keep the part of a convex vertex list with nx*x + ny*y <= offset."""
    if not pts:
        return []
    out = []
    px, py = pts[-1]
    dp = nx * px + ny * py - offset
    for qx, qy in pts:
        dq = nx * qx + ny * qy - offset
        p_in = dp <= CLIP_TOL
        q_in = dq <= CLIP_TOL
        if q_in:
            if not p_in:
                t = min(dp / (dp - dq), 1.0)
                out.append((px + t * (qx - px), py + t * (qy - py)))
            out.append((qx, qy))
        elif p_in and dp < -CLIP_TOL:
            t = dp / (dp - dq)
            out.append((px + t * (qx - px), py + t * (qy - py)))
        px, py, dp = qx, qy, dq
    return out


def clip_convex(poly: ConvexPolygon, halfplane) -> ConvexPolygon:
    """Intersect `poly` with {p : normal . p <= offset}; `halfplane` is (normal, offset)."""
    normal, offset = halfplane
    return poly.clip(normal, offset)


def clip_to_box(pts: Sequence, x0: float, y0: float, x1: float, y1: float) -> list:
    pts = clip_vertices(pts, -1.0, 0.0, -x0)
    if len(pts) < 3:
        return []
    pts = clip_vertices(pts, 1.0, 0.0, x1)
    if len(pts) < 3:
        return []
    pts = clip_vertices(pts, 0.0, -1.0, -y0)
    if len(pts) < 3:
        return []
    return clip_vertices(pts, 0.0, 1.0, y1)


def box_polygon_area(pts: Sequence, x0: float, y0: float, x1: float, y1: float) -> float:
    """Area of [x0,x1]x[y0,y1] intersected with a convex vertex list."""
    out = clip_to_box(pts, x0, y0, x1, y1)
    if len(out) < 3:
        return 0.0
    return max(shoelace(out), 0.0)


def intersect_area(r: Rect, q) -> float:
    """Area of an axis-parallel rectangle meeting a rotated rectangle (or convex polygon)."""
    if isinstance(q, RotatedRect):
        pts = q.corners()
    elif isinstance(q, ConvexPolygon):
        pts = q.vertices
    elif isinstance(q, Rect):
        pts = q.corners()
    else:
        pts = tuple(q)
    return box_polygon_area(pts, r.x0, r.y0, r.x1, r.y1)


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point
    kind: str  # "vertical" or "horizontal" (of the unrotated source)
    index: int  # 1 middle, 2 far side, 3 near side

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("zero-length segment")
        if self.kind not in ("vertical", "horizontal") or self.index not in (1, 2, 3):
            raise ValueError(f"bad segment label {self.kind}/{self.index}")


def segments_and_tops(q: RotatedRect):
    """The six rotated segments l^v_1..3, l^h_1..3 and the nine rotated tops.

    Index 1 is the midline, 2 the far side (x = a2 or y = b2), 3 the near side.
    Tops are the lattice {a1, mid, a2} x {b1, mid, b2}, rotated.
    """
    b = q.base
    xs = (b.x0 + 0.5 * b.w, b.x1, b.x0)
    ys = (b.y0 + 0.5 * b.h, b.y1, b.y0)
    segs = []
    for i, x in enumerate(xs, start=1):
        segs.append(Segment(rotate((x, b.y0), q.theta), rotate((x, b.y1), q.theta), "vertical", i))
    for i, y in enumerate(ys, start=1):
        segs.append(Segment(rotate((b.x0, y), q.theta), rotate((b.x1, y), q.theta), "horizontal", i))
    tops = []
    for y in (b.y0, b.y0 + 0.5 * b.h, b.y1):
        for x in (b.x0, b.x0 + 0.5 * b.w, b.x1):
            tops.append(rotate((x, y), q.theta))
    return tuple(segs), tuple(tops)


def segment_meets_rect(a, b, r: Rect, tol: float = 1e-12) -> bool:
    """Closed segment [a, b] against closed rectangle r (Liang-Barsky)."""
    ax, ay = (a.x, a.y) if isinstance(a, Point) else a
    bx, by = (b.x, b.y) if isinstance(b, Point) else b
    dx, dy = bx - ax, by - ay
    t0, t1 = 0.0, 1.0
    for p, qv in ((-dx, ax - (r.x0 - tol)), (dx, (r.x1 + tol) - ax), (-dy, ay - (r.y0 - tol)), (dy, (r.y1 + tol) - ay)):
        if p == 0.0:
            if qv < 0.0:
                return False
            continue
        t = qv / p
        if p < 0.0:
            if t > t1:
                return False
            if t > t0:
                t0 = t
        else:
            if t < t0:
                return False
            if t < t1:
                t1 = t
    return t0 <= t1


def point_in_convex(p, pts: Sequence, tol: float = 1e-12) -> bool:
    x, y = (p.x, p.y) if isinstance(p, Point) else p
    n = len(pts)
    for i in range(n):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % n]
        if (bx - ax) * (y - ay) - (by - ay) * (x - ax) < -tol:
            return False
    return True


def polygons_overlap(p1: Sequence, p2: Sequence) -> bool:
    """Separating-axis test for two convex polygons (closed; touching counts)."""
    for poly in (p1, p2):
        n = len(poly)
        for i in range(n):
            ax, ay = poly[i]
            bx, by = poly[(i + 1) % n]
            nx, ny = by - ay, ax - bx
            d1 = [nx * x + ny * y for x, y in p1]
            d2 = [nx * x + ny * y for x, y in p2]
            if max(d1) < min(d2) - 1e-12 or max(d2) < min(d1) - 1e-12:
                return False
    return True


def monte_carlo_area(r: Rect, q: RotatedRect, n: int, rng: np.random.Generator):
    """Monte-Carlo estimate of |r ∩ q| with its standard error."""
    pts = rng.random((n, 2)) * np.array([r.w, r.h]) + np.array([r.x0, r.y0])
    c, s = math.cos(q.theta), math.sin(q.theta)
    # pull back into the unrotated frame
    u = pts[:, 0] * c + pts[:, 1] * s
    v = -pts[:, 0] * s + pts[:, 1] * c
    b = q.base
    inside = (u >= b.x0) & (u <= b.x1) & (v >= b.y0) & (v <= b.y1)
    frac = inside.mean()
    se = math.sqrt(max(frac * (1 - frac), 1.0 / n) / n)
    return frac * r.area, se * r.area
