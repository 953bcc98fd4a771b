"""Strong maximal function, enlargements and Journé classes on bitmaps.

MM is evaluated over a finite dictionary: boxes of 2^a x 2^b working cells
anchored at every working cell.  The working lattice is the input lattice
refined by `refine` (2 by default), so concentric dyadic dilations of
lattice rectangles are themselves dictionary boxes.  MM is constant on each
working cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.ndimage import maximum_filter, maximum_filter1d

from .dyadic import DyadicInterval, DyadicRectangle, GridId, _offset, _pow2
from .geometry import Point, Rect, RotatedRect, box_polygon_area, point_in_convex, rotate
from .norms import OpenSet, ResolutionError

MAX_LEVEL = 24


# ---------------------------------------------------------------------------
# lattice helpers


def refine(S: OpenSet, factor: int) -> OpenSet:
    if factor == 1:
        return S
    m = np.repeat(np.repeat(S.mask, factor, axis=0), factor, axis=1)
    return OpenSet(m, S.x0, S.y0, S.cell / factor)


def _cumsum2(m: np.ndarray) -> np.ndarray:
    c = np.zeros((m.shape[0] + 1, m.shape[1] + 1))
    c[1:, 1:] = np.cumsum(np.cumsum(m, axis=0), axis=1)
    return c


def _box_means(cum: np.ndarray, w: int, h: int) -> np.ndarray:
    """Means over all w x h boxes, indexed by their lower-left cell."""
    s = cum[w:, h:] - cum[:-w, h:] - cum[w:, :-h] + cum[:-w, :-h]
    return s / (w * h)


def _spread(anchored: np.ndarray, w: int, h: int, shape) -> np.ndarray:
    """out[p, q] = max of anchored[i, j] over boxes [i, i+w) x [j, j+h) covering (p, q)."""
    full = np.zeros(shape, dtype=anchored.dtype)
    full[: anchored.shape[0], : anchored.shape[1]] = anchored
    return maximum_filter(full, size=(w, h), origin=((w - 1) // 2, (h - 1) // 2), mode="constant", cval=0)


def _dims(n: int):
    return [2**a for a in range(int(math.log2(n)) + 1)]


def _extend(S: OpenSet, r: Rect) -> OpenSet:
    """Pad the lattice of S with empty cells so its window covers r."""
    nx, ny = S.mask.shape
    lo_i = max(0, math.ceil((S.x0 - r.x0) / S.cell - 1e-9))
    lo_j = max(0, math.ceil((S.y0 - r.y0) / S.cell - 1e-9))
    hi_i = max(0, math.ceil((r.x1 - (S.x0 + nx * S.cell)) / S.cell - 1e-9))
    hi_j = max(0, math.ceil((r.y1 - (S.y0 + ny * S.cell)) / S.cell - 1e-9))
    if not (lo_i or lo_j or hi_i or hi_j):
        return S
    m = np.zeros((nx + lo_i + hi_i, ny + lo_j + hi_j), dtype=bool)
    m[lo_i : lo_i + nx, lo_j : lo_j + ny] = S.mask
    return OpenSet(m, S.x0 - lo_i * S.cell, S.y0 - lo_j * S.cell, S.cell)


def rotate_set(S: OpenSet, theta: float, cell: float | None = None) -> OpenSet:
    """Bitmap of phi^theta(S) by center sampling on a lattice covering the rotated window."""
    cell = cell or S.cell
    pts = [rotate(p, theta) for p in S.window().corners()]
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    x0 = math.floor(min(xs) / cell) * cell
    y0 = math.floor(min(ys) / cell) * cell
    nx = math.ceil((max(xs) - x0) / cell)
    ny = math.ceil((max(ys) - y0) / cell)
    cx = x0 + (np.arange(nx) + 0.5) * cell
    cy = y0 + (np.arange(ny) + 0.5) * cell
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    c, s = math.cos(theta), math.sin(theta)
    U = X * c + Y * s  # phi^{-theta}
    V = -X * s + Y * c
    i = np.floor((U - S.x0) / S.cell).astype(np.int64)
    j = np.floor((V - S.y0) / S.cell).astype(np.int64)
    snx, sny = S.mask.shape
    ok = (i >= 0) & (i < snx) & (j >= 0) & (j < sny)
    m = np.zeros((nx, ny), dtype=bool)
    m[ok] = S.mask[i[ok], j[ok]]
    return OpenSet(m, x0, y0, cell)


# ---------------------------------------------------------------------------
# maximal function


@dataclass(frozen=True)
class MaximalMap:
    """MM(1_S) on the working lattice: values[i, j] holds the value on cell (i, j)."""

    values: np.ndarray
    x0: float
    y0: float
    cell: float

    def __call__(self, p) -> float:
        x, y = (p.x, p.y) if isinstance(p, Point) else p
        i = math.floor((x - self.x0) / self.cell)
        j = math.floor((y - self.y0) / self.cell)
        nx, ny = self.values.shape
        if not (0 <= i < nx and 0 <= j < ny):
            raise ValueError(f"point ({x}, {y}) outside the lattice")
        return float(self.values[i, j])

    def superlevel(self, eps: float) -> OpenSet:
        return OpenSet(self.values > eps, self.x0, self.y0, self.cell)


def _support_box(mask: np.ndarray):
    ii = np.flatnonzero(mask.any(axis=1))
    jj = np.flatnonzero(mask.any(axis=0))
    return ii[0], ii[-1], jj[0], jj[-1]


def _scan(W: OpenSet, visit, max_cells: float = math.inf):
    """Call visit(region, anchored, w, h) for each dictionary shape, cropped to boxes meeting W.

    `anchored` holds the box means for anchors whose boxes lie in `region`.
    """
    m = W.mask.astype(float)
    nx, ny = m.shape
    if not W.mask.any():
        return
    cum = _cumsum2(m)
    i0, i1, j0, j1 = _support_box(W.mask)
    for w in _dims(nx):
        a0, a1 = max(0, i0 - w + 1), min(i1, nx - w)
        for h in _dims(ny):
            if w * h > max_cells:
                continue
            b0, b1 = max(0, j0 - h + 1), min(j1, ny - h)
            means = _box_means(cum[a0 : a1 + w + 1, b0 : b1 + h + 1], w, h)
            visit((slice(a0, a1 + w), slice(b0, b1 + h)), means, w, h)


def mm_map(S: OpenSet, refine_by: int = 2) -> MaximalMap:
    W = refine(S, refine_by)
    out = np.zeros(W.mask.shape)

    def visit(region, means, w, h):
        sub = out[region]
        np.maximum(sub, _spread(means, w, h, sub.shape), out=sub)

    _scan(W, visit)
    return MaximalMap(out, W.x0, W.y0, W.cell)


def _mm_at(W: OpenSet, x: float, y: float) -> float:
    m = W.mask.astype(float)
    cum = _cumsum2(m)
    nx, ny = m.shape
    p = math.floor((x - W.x0) / W.cell)
    q = math.floor((y - W.y0) / W.cell)
    best = 0.0
    for w in _dims(nx):
        i = np.arange(max(0, p - w + 1), min(p, nx - w) + 1)
        if i.size == 0:
            continue
        for h in _dims(ny):
            j = np.arange(max(0, q - h + 1), min(q, ny - h) + 1)
            if j.size == 0:
                continue
            I, J = np.meshgrid(i, j, indexing="ij")
            s = cum[I + w, J + h] - cum[I, J + h] - cum[I + w, J] + cum[I, J]
            best = max(best, float(s.max()) / (w * h))
    return best


def strong_max(ind: OpenSet, at, theta: float = 0.0, refine_by: int = 2) -> float:
    """MM^theta(1_ind) at a point, with MM^theta(h)(p) = MM[h o phi^theta](phi^{-theta} p)."""
    x, y = (at.x, at.y) if isinstance(at, Point) else at
    if theta:
        S = rotate_set(ind, -theta)  # bitmap of {q : phi^theta q in ind}
        q = rotate((x, y), -theta)
        x, y = q.x, q.y
    else:
        S = ind
    S = _extend(S, Rect(x - S.cell, y - S.cell, 2 * S.cell, 2 * S.cell))
    return _mm_at(refine(S, refine_by), x, y)


@dataclass(frozen=True)
class Enlargement:
    source: OpenSet
    epsilon: float
    result: OpenSet

    @property
    def ratio(self) -> float:
        return self.result.measure() / self.source.measure()

    def envelope(self, power: int = 1) -> float:
        """Fitted constant C in ratio <= C (eps^{-1} log eps^{-1})^power."""
        e = self.epsilon
        return self.ratio / (math.log(1 / e) / e) ** power


def _spread1(a: np.ndarray, size: int, axis: int, length: int) -> np.ndarray:
    """_spread along one axis: anchors cover [i, i + size), output has `length` cells."""
    shape = list(a.shape)
    shape[axis] = length
    full = np.zeros(shape, dtype=np.uint8)
    full[tuple(slice(0, n) for n in a.shape)] = a
    return maximum_filter1d(full, size, axis=axis, origin=(size - 1) // 2, mode="constant", cval=0)


def enlarge(omega: OpenSet, eps: float, refine_by: int = 2) -> Enlargement:
    """{MM(1_omega) > eps} on the working lattice."""
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    W = refine(omega, refine_by)
    out = W.mask.copy()
    if not out.any():
        return Enlargement(omega, eps, W.like(out))
    nx, ny = out.shape
    cum = _cumsum2(W.mask.astype(float))
    i0, i1, j0, j1 = _support_box(W.mask)
    # a box of more than count/eps cells has mean at most eps
    max_cells = W.mask.sum() / eps
    for w in _dims(nx):
        a0, a1 = max(0, i0 - w + 1), min(i1, nx - w)
        # union over heights of the y-spread hits; x-spreading commutes with the union
        acc = np.zeros((a1 - a0 + 1, ny), dtype=np.uint8)
        for h in _dims(ny):
            if w * h > max_cells:
                break
            b0, b1 = max(0, j0 - h + 1), min(j1, ny - h)
            c = cum[a0 : a1 + w + 1, b0 : b1 + h + 1]
            hit = (c[w:, h:] - c[:-w, h:] - c[w:, :-h] + c[:-w, :-h]) > eps * w * h
            if hit.any():
                acc[:, b0 : b1 + h] |= _spread1(hit, h, 1, b1 - b0 + h)
        if acc.any():
            out[a0 : a1 + w] |= _spread1(acc, w, 0, a1 - a0 + w).astype(bool)
    return Enlargement(omega, eps, W.like(out))


# ---------------------------------------------------------------------------
# maximal dyadic rectangles


def _axis_intervals(lo: float, hi: float, k: int, shift: Fraction):
    """Scale-k grid intervals inside [lo, hi]: (j0, lefts)."""
    off = float(_offset(shift, k))
    L = float(_pow2(k))
    j0 = math.ceil((lo - off) / L - 1e-9)
    j1 = math.floor((hi - off) / L + 1e-9)
    if j1 <= j0:
        return j0, np.zeros(0)
    return j0, off + L * np.arange(j0, j1)


def _parent_pos(lefts: np.ndarray, k: int, shift: Fraction, j0p: int, n_parent: int) -> np.ndarray:
    off = float(_offset(shift, k + 1))
    L = float(_pow2(k + 1))
    pos = np.floor((lefts - off) / L + 1e-9).astype(np.int64) - j0p
    return np.where((pos >= 0) & (pos < n_parent), pos, -1)


def maximal_rectangles(omega: OpenSet, grid: GridId = GridId(), kmin: int | None = None) -> list[DyadicRectangle]:
    """Grid rectangles inside omega that are maximal for inclusion."""
    if kmin is None:
        kmin = math.floor(math.log2(omega.cell) + 1e-9)
    win = omega.window()
    kmax_x = math.floor(math.log2(win.w) + 1e-9)
    kmax_y = math.floor(math.log2(win.h) + 1e-9)
    xs = {k: _axis_intervals(win.x0, win.x1, k, grid.sx) for k in range(kmin, kmax_x + 2)}
    ys = {k: _axis_intervals(win.y0, win.y1, k, grid.sy) for k in range(kmin, kmax_y + 2)}
    inside = {}
    for kx in range(kmin, kmax_x + 2):
        lx = xs[kx][1]
        for ky in range(kmin, kmax_y + 2):
            ly = ys[ky][1]
            if lx.size == 0 or ly.size == 0:
                inside[kx, ky] = np.zeros((lx.size, ly.size), dtype=bool)
                continue
            X0, Y0 = np.meshgrid(lx, ly, indexing="ij")
            inside[kx, ky] = omega.contains_many(X0, X0 + 2.0**kx, Y0, Y0 + 2.0**ky)
    out = []
    for kx in range(kmin, kmax_x + 1):
        for ky in range(kmin, kmax_y + 1):
            c = inside[kx, ky]
            if not c.any():
                continue
            keep = c.copy()
            px = _parent_pos(xs[kx][1], kx, grid.sx, xs[kx + 1][0], xs[kx + 1][1].size)
            up = inside[kx + 1, ky]
            if up.size:
                bad = px >= 0
                keep[bad] &= ~up[px[bad]]
            py = _parent_pos(ys[ky][1], ky, grid.sy, ys[ky + 1][0], ys[ky + 1][1].size)
            up = inside[kx, ky + 1]
            if up.size:
                bad = py >= 0
                keep[:, bad] &= ~up[:, py[bad]]
            for a, b in zip(*np.nonzero(keep)):
                out.append(
                    DyadicRectangle(
                        DyadicInterval(kx, xs[kx][0] + int(a), grid.sx),
                        DyadicInterval(ky, ys[ky][0] + int(b), grid.sy),
                    )
                )
    if not out:
        raise ResolutionError("omega contains no grid rectangle at this resolution")
    return sorted(out)


# ---------------------------------------------------------------------------
# Journé classes


@dataclass(frozen=True)
class JourneClass:
    l: int
    members: tuple

    def measure(self) -> float:
        return float(sum(K.area for K in self.members))


def _levels(members, tilde2: OpenSet) -> np.ndarray:
    rects = [K.rect() for K in members]
    cx = np.array([r.center[0] for r in rects])
    cy = np.array([r.center[1] for r in rects])
    w = np.array([r.w for r in rects])
    h = np.array([r.h for r in rects])
    level = np.full(len(rects), -1)
    alive = np.ones(len(rects), dtype=bool)
    for l in range(MAX_LEVEL + 1):
        lam = 2.0**l
        ok = tilde2.contains_many(cx - 0.5 * lam * w, cx + 0.5 * lam * w, cy - 0.5 * lam * h, cy + 0.5 * lam * h)
        alive &= ok
        level[alive] = l
        if not alive.any():
            break
    return level


def classify_journe(omega: OpenSet, eps: float, grid: GridId = GridId(), tilde2: OpenSet | None = None) -> list[JourneClass]:
    """Partition the maximal rectangles of omega by the largest l with 2^l K ⊆ double enlargement."""
    if tilde2 is None:
        tilde2 = double_enlargement(omega, eps)[1].result
    members = maximal_rectangles(omega, grid)
    level = _levels(members, tilde2)
    if (level < 0).any():
        raise AssertionError("a maximal rectangle escaped the enlargement")
    return [
        JourneClass(int(l), tuple(K for K, lv in zip(members, level) if lv == l))
        for l in sorted(set(level.tolist()))
    ]


def double_enlargement(omega: OpenSet, eps: float, refine_by: int = 2) -> tuple[Enlargement, Enlargement]:
    first = enlarge(omega, eps, refine_by)
    second = enlarge(first.result, eps, refine_by=1)
    return first, second


@dataclass
class JourneRun:
    omega: OpenSet
    epsilon: float
    first: Enlargement
    second: Enlargement
    classes: list = field(default_factory=list)

    def lemma54_ok(self, const: float = 8.0) -> bool:
        return all(2.0 ** (-2 * c.l) <= const * self.epsilon for c in self.classes if c.members)

    def lemma55_constants(self, nu: float = 0.5) -> dict:
        """Per class: sum |K| / ((sqrt(eps) 2^l)^nu |omega|)."""
        m = self.omega.measure()
        return {c.l: c.measure() / ((math.sqrt(self.epsilon) * 2.0**c.l) ** nu * m) for c in self.classes}

    def envelopes(self) -> tuple[float, float]:
        e = self.epsilon
        lg = math.log(1 / e) / e
        m = self.omega.measure()
        return self.first.result.measure() / (lg * m), self.second.result.measure() / (lg * lg * m)


def journe_run(omega: OpenSet, eps: float, grid: GridId = GridId(), refine_by: int = 2) -> JourneRun:
    """Double enlargement and Journe classes.  refine_by=1 is exact for omega on its own lattice
    and several times faster; finer working lattices only move the first enlargement slightly."""
    first, second = double_enlargement(omega, eps, refine_by)
    classes = classify_journe(omega, eps, grid, tilde2=second.result)
    return JourneRun(omega, eps, first, second, classes)


def random_omega(rng, n_rects: int = 20, resolution: int = 6, window: Rect = Rect(-1.5, -1.5, 4.0, 4.0)) -> OpenSet:
    """Union of up to n_rects dyadic rectangles inside [0,1]^2 with sides >= 2^-resolution."""
    out = OpenSet.empty(window, 2.0**-resolution)
    for _ in range(int(rng.integers(1, n_rects + 1))):
        kx, ky = (int(v) for v in rng.integers(0, resolution + 1, size=2))
        jx = int(rng.integers(0, 2**kx))
        jy = int(rng.integers(0, 2**ky))
        out.add(Rect(jx / 2**kx, jy / 2**ky, 1 / 2**kx, 1 / 2**ky))
    out.invalidate()
    return out


# ---------------------------------------------------------------------------
# sub-maximal splitting


def _split_axis(I: DyadicInterval, k: int) -> list[DyadicInterval]:
    out = [I]
    while out[0].k > k:
        out = [c for J in out for c in J.children()]
    return out


def submaximal_split(K_max: DyadicRectangle, l: int) -> list[DyadicRectangle]:
    """Cut K_max along its long side into pieces with eccentricity in [2^{-l+3}, 2^{l-3}]."""
    if l < 3:
        raise ValueError("eccentricity band [2^{-l+3}, 2^{l-3}] is empty for l < 3")
    d = K_max.iy.k - K_max.ix.k
    if d > l - 3:
        return [DyadicRectangle(K_max.ix, J) for J in _split_axis(K_max.iy, K_max.ix.k + l - 3)]
    if d < -(l - 3):
        return [DyadicRectangle(I, K_max.iy) for I in _split_axis(K_max.ix, K_max.iy.k + l - 3)]
    return [K_max]


# ---------------------------------------------------------------------------
# geometric consequences of R ⊄ enlarged set


def obs56_conditions(kappa1: float, kappa2: float, l: int, theta: float, R1: float, R2: float, const: float = 0.5):
    """The two necessary conditions on R = R1 x R2 against K_max = kappa1 x kappa2."""
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    inv = lambda a, b: a / b if b > 0 else math.inf  # noqa: E731
    first = 2.0**-l * R1 >= const * min(inv(kappa1, c), inv(kappa2, s))
    second = 2.0**-l * R2 >= const * min(inv(kappa1, s), inv(kappa2, c))
    return first, second


def obs56_hypothesis(K: Rect, l: int, theta: float, R: Rect) -> bool:
    """R meets phi(K) and R is not inside phi(2^l K)."""
    meets = box_polygon_area(RotatedRect(K, theta).corners(), R.x0, R.y0, R.x1, R.y1) > 0
    big = RotatedRect(K.dilate(2.0**l), theta).corners()
    inside = all(point_in_convex(p, big) for p in R.corners())
    return meets and not inside


def obs56_sample(n: int, rng, l_range=(1, 10)) -> dict:
    """Random pairs satisfying the hypothesis; counts violations of both constants."""
    stats = {"pairs": 0, "viol_eighth": 0, "viol_half": 0}
    tries = 0
    while stats["pairs"] < n and tries < 200 * n:
        tries += 1
        l = int(rng.integers(l_range[0], l_range[1] + 1))
        theta = float(rng.uniform(0.01, math.pi / 2 - 0.01))
        k1, k2 = (float(2.0 ** rng.integers(-3, 4)) for _ in range(2))
        K = Rect(-k1 / 2, -k2 / 2, k1, k2)
        R1, R2 = (float(2.0 ** rng.integers(-3, l + 4)) for _ in range(2))
        pts = RotatedRect(K, theta).corners()
        px, py = pts[int(rng.integers(0, 4))]
        R = Rect(px - rng.uniform(0, R1), py - rng.uniform(0, R2), R1, R2)
        if not obs56_hypothesis(K, l, theta, R):
            continue
        stats["pairs"] += 1
        if not any(obs56_conditions(k1, k2, l, theta, R1, R2, 0.125)):
            stats["viol_eighth"] += 1
        if not any(obs56_conditions(k1, k2, l, theta, R1, R2, 0.5)):
            stats["viol_half"] += 1
    return stats


def cor57_margin(kx: int, ky: int, l: int, theta: float) -> float:
    """Worst (2^{k1} + 2^{k2}) / 2^{r1} over admissible K in K_max = 2^kx x 2^ky, for the
    smallest dyadic 2^{r1} allowed by the first necessary condition."""
    c = abs(math.cos(theta))
    need = 2.0**l * 0.5 * 2.0**kx / c
    r1 = math.ceil(math.log2(need) - 1e-12)
    best = 0.0
    for k1 in range(kx - 40, kx + 1):
        k2 = min(ky, k1 + l - 3)
        if k2 - k1 < -(l - 3):
            continue
        best = max(best, (2.0**k1 + 2.0**k2) / 2.0**r1)
    return best
