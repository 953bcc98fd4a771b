"""Inner products between a Haar wavelet and a rotated Haar wavelet.

For axis-parallel S and a rectangle T rotated by theta,

    <h_S o phi, h_T> = <h_S, h_T o phi^{-1}>
                     = sum over quadrant pairs of sign * |S_a ∩ phi(T_b)| / sqrt(|S||T|),

which is exact up to floating point once the sixteen convex intersections
are clipped.  The same machinery evaluates the segment pairings and the
case analysis used to bound these numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicRectangle
from .geometry import (
    Rect,
    RotatedRect,
    box_polygon_area,
    clip_vertices,
    polygons_overlap,
    segment_meets_rect,
    segments_and_tops,
    shoelace,
)

AXIS_TOL = 1e-12
ZERO_TOL = 1e-12

CASES = (
    "no-intersection",
    "vertical-only",
    "horizontal-only",
    "both-no-vertical-boundary",
    "both-no-horizontal-boundary",
    "tops-in-S",
)


def as_rect(R) -> Rect:
    return R.rect() if isinstance(R, DyadicRectangle) else R


@dataclass(frozen=True)
class WaveletPair:
    S: object  # DyadicRectangle or Rect, axis-parallel
    T: object  # DyadicRectangle or Rect, rotated by theta
    theta: float

    @property
    def s(self) -> Rect:
        return as_rect(self.S)

    @property
    def t(self) -> Rect:
        return as_rect(self.T)

    def rotated(self) -> RotatedRect:
        return RotatedRect(self.t, self.theta)


@dataclass(frozen=True)
class IntersectionCase:
    tag: str
    fallback: bool = False  # both segment families met and neither boundary condition held

    def __post_init__(self):
        if self.tag not in CASES:
            raise ValueError(f"unknown case {self.tag}")


def is_axis_angle(theta: float) -> bool:
    r = math.remainder(theta, math.pi / 2)
    return abs(r) <= AXIS_TOL


def _pair(S, T=None, theta=None) -> WaveletPair:
    if isinstance(S, WaveletPair):
        return S
    return WaveletPair(S, T, theta)


def _rotated_quadrants(t: Rect, theta: float):
    c, s = math.cos(theta), math.sin(theta)
    out = []
    for q, sign in t.quadrants():
        pts = [(x * c - y * s, x * s + y * c) for x, y in q.corners()]
        out.append((pts, sign))
    return out


def inner_product(S, T=None, theta=None) -> float:
    """<h_S o phi^theta, h_T>, exact via polygon clipping."""
    pr = _pair(S, T, theta)
    s, t = pr.s, pr.t
    rq = _rotated_quadrants(t, pr.theta)
    acc = 0.0
    for sq, ssign in s.quadrants():
        for pts, tsign in rq:
            a = box_polygon_area(pts, sq.x0, sq.y0, sq.x1, sq.y1)
            if a:
                acc += ssign * tsign * a
    return acc / math.sqrt(s.area * t.area)


def overlap_area(S, T=None, theta=None) -> float:
    pr = _pair(S, T, theta)
    s = pr.s
    return box_polygon_area(pr.rotated().corners(), s.x0, s.y0, s.x1, s.y1)


def monte_carlo_inner(S, T=None, theta=None, n: int = 10**6, rng=None):
    """Monte-Carlo estimate of the inner product and its standard error."""
    pr = _pair(S, T, theta)
    rng = np.random.default_rng(rng)
    s, t = pr.s, pr.t
    pts = rng.random((n, 2)) * np.array([s.w, s.h]) + np.array([s.x0, s.y0])
    hs = np.where(pts[:, 0] < s.x0 + 0.5 * s.w, 1.0, -1.0) * np.where(pts[:, 1] < s.y0 + 0.5 * s.h, 1.0, -1.0)
    c, sn = math.cos(pr.theta), math.sin(pr.theta)
    u = pts[:, 0] * c + pts[:, 1] * sn
    v = -pts[:, 0] * sn + pts[:, 1] * c
    inside = (u >= t.x0) & (u < t.x1) & (v >= t.y0) & (v < t.y1)
    ht = np.where(u < t.x0 + 0.5 * t.w, 1.0, -1.0) * np.where(v < t.y0 + 0.5 * t.h, 1.0, -1.0) * inside
    vals = hs * ht * s.area / math.sqrt(s.area * t.area)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))


def _boundary_meets(s: Rect, poly, which: str) -> bool:
    if which == "vertical":
        edges = (((s.x0, s.y0), (s.x0, s.y1)), ((s.x1, s.y0), (s.x1, s.y1)))
    else:
        edges = (((s.x0, s.y0), (s.x1, s.y0)), ((s.x0, s.y1), (s.x1, s.y1)))
    return any(polygons_overlap([a, b], poly) for a, b in edges)


def classify(S, T=None, theta=None) -> IntersectionCase:
    pr = _pair(S, T, theta)
    s = pr.s
    segs, tops = segments_and_tops(pr.rotated())
    if any(s.contains_point(p, tol=AXIS_TOL * max(s.w, s.h)) for p in tops):
        return IntersectionCase("tops-in-S")
    tol = AXIS_TOL * max(s.w, s.h)
    vert = any(segment_meets_rect(g.a, g.b, s, tol) for g in segs if g.kind == "vertical")
    hori = any(segment_meets_rect(g.a, g.b, s, tol) for g in segs if g.kind == "horizontal")
    if not vert and not hori:
        return IntersectionCase("no-intersection")
    if vert and not hori:
        return IntersectionCase("vertical-only")
    if hori and not vert:
        return IntersectionCase("horizontal-only")
    poly = pr.rotated().corners()
    if not _boundary_meets(s, poly, "vertical"):
        return IntersectionCase("both-no-vertical-boundary")
    if not _boundary_meets(s, poly, "horizontal"):
        return IntersectionCase("both-no-horizontal-boundary")
    return IntersectionCase("tops-in-S", fallback=True)


def _halfplane_pairing(s: Rect, a, b) -> float:
    """<h_S, sgn> for the sign of the side of the line through a, b (unnormalized in T)."""
    (ax, ay), (bx, by) = (a.x, a.y), (b.x, b.y)
    nx, ny = by - ay, ax - bx  # normal; the kept side is n.p <= n.a
    off = nx * ax + ny * ay
    acc = 0.0
    for q, sign in s.quadrants():
        pts = clip_vertices(q.corners(), nx, ny, off)
        if len(pts) >= 3:
            acc += sign * max(shoelace(pts), 0.0)
    return 2.0 * acc / math.sqrt(s.area)


def _delta(pr: WaveletPair, kind: str) -> float:
    s, t = pr.s, pr.t
    segs, _ = segments_and_tops(pr.rotated())
    tol = AXIS_TOL * max(s.w, s.h)
    total = 0.0
    for g in segs:
        if g.kind == kind and segment_meets_rect(g.a, g.b, s, tol):
            total += abs(_halfplane_pairing(s, g.a, g.b))
    return total / math.sqrt(t.area)


def delta_v(S, T=None, theta=None) -> float:
    """Sum over the rotated vertical segments meeting S of |<h_S, |T|^{-1/2} sgn(side of line)>|."""
    return _delta(_pair(S, T, theta), "vertical")


def delta_h(S, T=None, theta=None) -> float:
    return _delta(_pair(S, T, theta), "horizontal")


def vertical_bound(pr: WaveletPair) -> float:
    s, t = pr.s, pr.t
    tn, ct = abs(math.tan(pr.theta)), abs(1.0 / math.tan(pr.theta))
    return 3.0 * min(s.h**2 * tn, s.w**2 * ct) / math.sqrt(s.area * t.area)


def horizontal_bound(pr: WaveletPair) -> float:
    s, t = pr.s, pr.t
    tn, ct = abs(math.tan(pr.theta)), abs(1.0 / math.tan(pr.theta))
    return 3.0 * min(s.w**2 * tn, s.h**2 * ct) / math.sqrt(s.area * t.area)


def trivial_bound(pr: WaveletPair) -> float:
    s, t = pr.s, pr.t
    return min(s.area, t.area) / math.sqrt(s.area * t.area)


def prop1_bound(S, T=None, theta=None, case: IntersectionCase | None = None) -> float:
    """Right-hand side of the applicable cancellation estimate."""
    pr = _pair(S, T, theta)
    case = case or classify(pr)
    if case.tag == "no-intersection":
        return 0.0
    if case.tag == "tops-in-S":
        return trivial_bound(pr)
    if is_axis_angle(pr.theta):
        return math.inf
    if case.tag == "vertical-only":
        return vertical_bound(pr)
    if case.tag == "horizontal-only":
        return horizontal_bound(pr)
    return vertical_bound(pr) + horizontal_bound(pr)


def dominated(S, T=None, theta=None, tol: float = ZERO_TOL) -> bool:
    """|inner_product| <= prop1_bound, with an absolute slack for round-off."""
    pr = _pair(S, T, theta)
    return abs(inner_product(pr)) <= prop1_bound(pr) + tol
