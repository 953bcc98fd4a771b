"""Oscillations, BMO estimates, Carleson sums and Sobolev norms.

Every BMO number produced here is a lower bound for the true supremum: it
is the Carleson sum of an explicit witness set, computed over a finite
range of scales.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import integrate

from .dyadic import DEFAULT_DELTA, DyadicInterval, DyadicRectangle, GridId, shift_of
from .geometry import Rect
from .haar import (
    Factor1D,
    GridSamples,
    HaarCoefficientMap,
    PowerTail,
    QuadratureError,
    ScalarField,
    SeparableExpr,
    coeff,
    coeffs_grid,
)


class ResolutionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# open sets as bitmaps


@dataclass
class OpenSet:
    """Union of cells of side `cell` over a lattice anchored at (x0, y0).

    mask[i, j] marks the cell [x0 + i*cell, x0 + (i+1)*cell) x [y0 + j*cell, ...).
    """

    mask: np.ndarray
    x0: float = 0.0
    y0: float = 0.0
    cell: float = 1.0

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.ndim != 2:
            raise ValueError("mask must be 2-D")

    @property
    def shape(self):
        return self.mask.shape

    @property
    def resolution(self) -> int:
        return -round(math.log2(self.cell))

    def measure(self) -> float:
        return float(self.mask.sum()) * self.cell * self.cell

    def is_empty(self) -> bool:
        return not self.mask.any()

    def window(self) -> Rect:
        nx, ny = self.mask.shape
        return Rect(self.x0, self.y0, nx * self.cell, ny * self.cell)

    def like(self, mask) -> "OpenSet":
        return OpenSet(mask, self.x0, self.y0, self.cell)

    @classmethod
    def empty(cls, window: Rect, cell: float) -> "OpenSet":
        nx = round(window.w / cell)
        ny = round(window.h / cell)
        return cls(np.zeros((nx, ny), dtype=bool), window.x0, window.y0, cell)

    @classmethod
    def from_rects(cls, rects: Iterable, window: Rect, cell: float) -> "OpenSet":
        out = cls.empty(window, cell)
        for r in rects:
            out.add(r)
        return out

    def _index_box(self, x0, x1, y0, y1):
        # cells meeting the open box; tolerances absorb float endpoints on the lattice
        eps = 1e-9
        i0 = np.floor((np.asarray(x0) - self.x0) / self.cell + eps).astype(np.int64)
        i1 = np.ceil((np.asarray(x1) - self.x0) / self.cell - eps).astype(np.int64)
        j0 = np.floor((np.asarray(y0) - self.y0) / self.cell + eps).astype(np.int64)
        j1 = np.ceil((np.asarray(y1) - self.y0) / self.cell - eps).astype(np.int64)
        return i0, i1, j0, j1

    def add(self, r):
        r = r.rect() if isinstance(r, DyadicRectangle) else r
        i0, i1, j0, j1 = self._index_box(r.x0, r.x1, r.y0, r.y1)
        nx, ny = self.mask.shape
        self.mask[max(i0, 0) : min(i1, nx), max(j0, 0) : min(j1, ny)] = True

    def _holes(self):
        c = getattr(self, "_hole_cum", None)
        if c is None or c.shape != (self.mask.shape[0] + 1, self.mask.shape[1] + 1):
            c = np.zeros((self.mask.shape[0] + 1, self.mask.shape[1] + 1), dtype=np.int64)
            c[1:, 1:] = np.cumsum(np.cumsum(~self.mask, axis=0), axis=1)
            self._hole_cum = c
        return c

    def invalidate(self):
        self._hole_cum = None

    def contains_many(self, x0, x1, y0, y1) -> np.ndarray:
        """Vectorized test of box ⊆ set (boxes outside the window are not contained)."""
        c = self._holes()
        i0, i1, j0, j1 = self._index_box(x0, x1, y0, y1)
        nx, ny = self.mask.shape
        inside = (i0 >= 0) & (j0 >= 0) & (i1 <= nx) & (j1 <= ny) & (i1 > i0) & (j1 > j0)
        i0c, i1c = np.clip(i0, 0, nx), np.clip(i1, 0, nx)
        j0c, j1c = np.clip(j0, 0, ny), np.clip(j1, 0, ny)
        holes = c[i1c, j1c] - c[i0c, j1c] - c[i1c, j0c] + c[i0c, j0c]
        return inside & (holes == 0)

    def contains(self, r) -> bool:
        r = r.rect() if isinstance(r, DyadicRectangle) else r
        return bool(self.contains_many(np.array([r.x0]), np.array([r.x1]), np.array([r.y0]), np.array([r.y1]))[0])

    def union(self, other: "OpenSet") -> "OpenSet":
        self._check_same(other)
        return self.like(self.mask | other.mask)

    def issubset(self, other: "OpenSet") -> bool:
        self._check_same(other)
        return not (self.mask & ~other.mask).any()

    def _check_same(self, other):
        if self.mask.shape != other.mask.shape or (self.x0, self.y0, self.cell) != (other.x0, other.y0, other.cell):
            raise ValueError("open sets live on different lattices")

    def bbox(self) -> Optional[Rect]:
        if self.is_empty():
            return None
        ii = np.flatnonzero(self.mask.any(axis=1))
        jj = np.flatnonzero(self.mask.any(axis=0))
        return Rect(
            self.x0 + ii[0] * self.cell,
            self.y0 + jj[0] * self.cell,
            (ii[-1] - ii[0] + 1) * self.cell,
            (jj[-1] - jj[0] + 1) * self.cell,
        )

    def header(self) -> dict:
        nx, ny = self.mask.shape
        return {"x0": self.x0, "y0": self.y0, "cell": self.cell, "nx": nx, "ny": ny, "resolution": self.resolution}

    def to_pbm(self) -> str:
        """Plain PBM; the first comment line carries the JSON header.  Rows run top to bottom."""
        nx, ny = self.mask.shape
        rows = ["".join("1" if v else "0" for v in self.mask[:, j]) for j in range(ny - 1, -1, -1)]
        return "P1\n# " + json.dumps(self.header()) + f"\n{nx} {ny}\n" + "\n".join(rows) + "\n"

    @classmethod
    def from_pbm(cls, text: str) -> "OpenSet":
        lines = text.splitlines()
        if not lines or lines[0].strip() != "P1":
            raise ValueError("not a plain PBM")
        header = None
        body = []
        for line in lines[1:]:
            if line.startswith("#"):
                if header is None:
                    header = json.loads(line[1:].strip())
                continue
            body.append(line)
        if header is None:
            raise ValueError("missing JSON header")
        nx, ny = map(int, body[0].split())
        bits = "".join(body[1:]).replace(" ", "")
        if len(bits) != nx * ny:
            raise ValueError("bitmap size does not match header")
        arr = np.array([c == "1" for c in bits], dtype=bool).reshape(ny, nx)[::-1].T
        return cls(arr.copy(), header["x0"], header["y0"], header["cell"])


# ---------------------------------------------------------------------------
# one-parameter BMO


def _mean_and_sq(f, a: float, b: float):
    if isinstance(f, Factor1D):
        mean = float(f.integral(a, b)) / (b - a)
        pts = [t for t in getattr(f, "breakpoints", ()) if a < t < b]
    else:
        mean = integrate.quad(f, a, b, limit=200)[0] / (b - a)
        pts = []
    kw = dict(limit=400, epsabs=1e-14, epsrel=1e-11)
    if pts:
        kw["points"] = pts
    v, err = integrate.quad(lambda t: (float(f(t)) - mean) ** 2, a, b, **kw)
    return mean, v, err


def osc(f, I) -> float:
    """L^2 oscillation (|I|^{-1} ∫_I |f - avg_I f|^2)^{1/2}."""
    a, b = (I.bounds() if isinstance(I, DyadicInterval) else (float(I[0]), float(I[1])))
    if not b > a:
        raise ValueError("empty interval")
    if isinstance(f, PowerTail):
        # exact: mean and mean square from closed-form antiderivatives
        m = float(f.integral(a, b)) / (b - a)
        m2 = float(f.sq_antiderivative(b) - f.sq_antiderivative(a)) / (b - a)
        var = m2 - m * m
        if var > 1e-9 * m2:
            return math.sqrt(var)
    _, v, err = _mean_and_sq(f, a, b)
    if err > 1e-6 * max(v, 1e-300) and err > 1e-15:
        raise QuadratureError("oscillation quadrature failed", err)
    return math.sqrt(max(v, 0.0) / (b - a))


@dataclass
class BmoEstimate:
    """A certified lower bound together with the set that achieves it."""

    value: float
    witness: object  # OpenSet, Rect, or an interval (a, b)
    family: str
    grid: str = ""
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        w = self.witness
        if isinstance(w, OpenSet):
            wj = {"kind": "openset", "header": w.header(), "pbm": w.to_pbm()}
        elif isinstance(w, Rect):
            wj = {"kind": "rect", "x0": w.x0, "y0": w.y0, "w": w.w, "h": w.h}
        elif w is None:
            wj = None
        else:
            wj = {"kind": "interval", "a": float(w[0]), "b": float(w[1])}
        return json.dumps({"value": self.value, "family": self.family, "grid": self.grid, "witness": wj, "meta": self.meta})

    @classmethod
    def from_json(cls, text: str) -> "BmoEstimate":
        d = json.loads(text)
        wj = d["witness"]
        if wj is None:
            w = None
        elif wj["kind"] == "openset":
            w = OpenSet.from_pbm(wj["pbm"])
        elif wj["kind"] == "rect":
            w = Rect(wj["x0"], wj["y0"], wj["w"], wj["h"])
        else:
            w = (wj["a"], wj["b"])
        return cls(d["value"], w, d["family"], d.get("grid", ""), d.get("meta", {}))


def bmo_1d(f, family: Sequence) -> BmoEstimate:
    """Max of osc over a finite family of intervals."""
    best, arg = -1.0, None
    for I in family:
        v = osc(f, I)
        if v > best:
            best, arg = v, I
    if arg is None:
        raise ValueError("empty interval family")
    a, b = (arg.bounds() if isinstance(arg, DyadicInterval) else arg)
    return BmoEstimate(best, (float(a), float(b)), "intervals", meta={"family_size": len(family)})


def structured_family(n: int = 24, jmax: float = 1e4, random: int = 200, seed: int = 0) -> list:
    """Intervals [1, 1+j], [1-j1, 1+j2] (j1 < 2), [-1-j1, 1+j2] on geometric grids,
    plus random intervals; these cover the extremal configurations for the tail function."""
    js = np.geomspace(1e-3, jmax, n)
    fam = [(1.0, 1.0 + j) for j in js]
    j1s = np.linspace(0.0, 1.95, 8)
    fam += [(1.0 - a, 1.0 + b) for a in j1s for b in js]
    fam += [(-1.0 - a, 1.0 + b) for a in np.concatenate([[0.0], js[::2]]) for b in js[::2]]
    rng = np.random.default_rng(seed)
    for _ in range(random):
        c = rng.uniform(-20, 20)
        L = 10 ** rng.uniform(-2, 3)
        fam.append((c, c + L))
    return fam


# ---------------------------------------------------------------------------
# coefficient tables and Carleson sums


def _axis_table(lo: float, hi: float, shift: Fraction, kmin: int, kmax: int):
    """All scale-k grid intervals inside [lo, hi], kmin <= k <= kmax: (k, j, left, length)."""
    ks, js, lefts, lens = [], [], [], []
    for k in range(kmin, kmax + 1):
        off = float(shift_of(k, shift)) if shift != 0 else 0.0
        L = 2.0**k
        j0 = math.ceil((lo - off) / L - 1e-9)
        j1 = math.floor((hi - off) / L + 1e-9)
        if j1 <= j0:
            continue
        j = np.arange(j0, j1, dtype=np.int64)
        ks.append(np.full(len(j), k, dtype=np.int64))
        js.append(j)
        lefts.append(off + L * j)
        lens.append(np.full(len(j), L))
    if not ks:
        z = np.zeros(0)
        return z.astype(np.int64), z.astype(np.int64), z, z
    return np.concatenate(ks), np.concatenate(js), np.concatenate(lefts), np.concatenate(lens)


MAX_TABLE = 4_000_000


def coefficient_table(F: ScalarField, window: Rect, grid: GridId, kmin: int, kmax: int, kmin_y: int | None = None, kmax_y: int | None = None) -> HaarCoefficientMap:
    """Coefficients of every grid rectangle inside the window with scales in range."""
    kmin_y = kmin if kmin_y is None else kmin_y
    kmax_y = kmax if kmax_y is None else kmax_y
    kx, jx, lx, Lx = _axis_table(window.x0, window.x1, grid.sx, kmin, kmax)
    ky, jy, ly, Ly = _axis_table(window.y0, window.y1, grid.sy, kmin_y, kmax_y)
    n = len(kx) * len(ky)
    if n > MAX_TABLE:
        raise ValueError(f"coefficient table of {n} entries refused")
    if isinstance(F, SeparableExpr):
        cx = np.concatenate([F.f.haar_coeffs(lx[kx == k], 2.0**k) for k in np.unique(kx)]) if len(kx) else np.zeros(0)
        cy = np.concatenate([F.g.haar_coeffs(ly[ky == k], 2.0**k) for k in np.unique(ky)]) if len(ky) else np.zeros(0)
        vals = np.outer(cx, cy).ravel()
    elif isinstance(F, GridSamples):
        vals = np.empty(n)
        for a in np.unique(kx):
            ia = np.flatnonzero(kx == a)
            for b in np.unique(ky):
                ib = np.flatnonzero(ky == b)
                X, Y = np.meshgrid(lx[ia], ly[ib], indexing="ij")
                block = coeffs_grid(F, X.ravel(), Y.ravel(), 2.0**a, 2.0**b)
                # scatter back into the (ix, iy) raveled order
                idx = (ia[:, None] * len(ky) + ib[None, :]).ravel()
                vals[idx] = block
    else:
        vals = np.empty(n)
        for a in range(len(kx)):
            for b in range(len(ky)):
                r = Rect(lx[a], ly[b], Lx[a], Ly[b])
                vals[a * len(ky) + b] = coeff(F, r)
    return HaarCoefficientMap(
        grid,
        np.repeat(kx, len(ky)),
        np.repeat(jx, len(ky)),
        np.tile(ky, len(kx)),
        np.tile(jy, len(kx)),
        vals,
    )


def carleson_sum(cmap: HaarCoefficientMap, omega) -> float:
    """(|Ω|^{-1} Σ_{R ⊆ Ω} |<F, h_R>|^2)^{1/2} over the entries of the map."""
    (lx, Lx), (ly, Ly) = cmap.lefts()
    if isinstance(omega, OpenSet):
        inside = omega.contains_many(lx, lx + Lx, ly, ly + Ly)
        meas = omega.measure()
    else:
        r = omega.rect() if isinstance(omega, DyadicRectangle) else omega
        tol = 1e-12 * max(r.w, r.h)
        inside = (lx >= r.x0 - tol) & (lx + Lx <= r.x1 + tol) & (ly >= r.y0 - tol) & (ly + Ly <= r.y1 + tol)
        meas = r.area
    if meas <= 0:
        raise ValueError("empty open set")
    return math.sqrt(float(np.sum(cmap.values[inside] ** 2)) / meas)


def _ancestor(left: np.ndarray, length: np.ndarray, K: int, shift: Fraction) -> np.ndarray:
    off = float(shift_of(K, shift)) if shift != 0 else 0.0
    L = 2.0**K
    return np.floor((left + 0.5 * length - off) / L).astype(np.int64)


def single_rectangle_sums(cmap: HaarCoefficientMap, kmax_x: int | None = None, kmax_y: int | None = None):
    """Carleson sum of every grid rectangle Ω = R with R spanning the map's scales.

    Returns arrays (kx, jx, ky, jy, value).  Uses nesting: an entry lies in R
    iff its x- and y-ancestors at R's scales are R's intervals.
    """
    (lx, Lx), (ly, Ly) = cmap.lefts()
    e = cmap.values**2
    kxs = np.unique(cmap.kx)
    kys = np.unique(cmap.ky)
    kmax_x = int(kxs.max()) if kmax_x is None else kmax_x
    kmax_y = int(kys.max()) if kmax_y is None else kmax_y
    out = []
    for K in range(int(kxs.min()), kmax_x + 1):
        mx = cmap.kx <= K
        ax = _ancestor(lx, Lx, K, cmap.grid.sx)
        for L in range(int(kys.min()), kmax_y + 1):
            m = mx & (cmap.ky <= L)
            if not m.any():
                continue
            ay = _ancestor(ly, Ly, L, cmap.grid.sy)
            bx, by = ax[m], ay[m]
            x0, y0 = bx.min(), by.min()
            ny = int(by.max() - y0) + 1
            key = (bx - x0) * ny + (by - y0)
            uniq, inv = np.unique(key, return_inverse=True)
            sums = np.bincount(inv.ravel(), weights=e[m], minlength=len(uniq))
            vals = np.sqrt(sums / (2.0**K * 2.0**L))
            out.append(
                np.column_stack([np.full(len(uniq), K), uniq // ny + x0, np.full(len(uniq), L), uniq % ny + y0, vals])
            )
    if not out:
        return np.zeros((0, 5))
    return np.concatenate(out)


def _rect_of(row, grid: GridId) -> DyadicRectangle:
    K, jx, L, jy = (int(v) for v in row[:4])
    return DyadicRectangle(DyadicInterval(K, jx, grid.sx), DyadicInterval(L, jy, grid.sy))


def _window_of(cmap: HaarCoefficientMap):
    (lx, Lx), (ly, Ly) = cmap.lefts()
    return Rect(lx.min(), ly.min(), (lx + Lx).max() - lx.min(), (ly + Ly).max() - ly.min()), min(Lx.min(), Ly.min())


def _best_single(cmap: HaarCoefficientMap, **kw):
    rows = single_rectangle_sums(cmap, **kw)
    if not len(rows):
        return 0.0, None, rows
    i = int(np.argmax(rows[:, 4]))
    return float(rows[i, 4]), _rect_of(rows[i], cmap.grid), rows


def _lattice_for(cmap: HaarCoefficientMap, rects) -> OpenSet:
    win, cell = _window_of(cmap)
    boxes = [r.rect() for r in rects]
    x0 = min([win.x0] + [b.x0 for b in boxes])
    y0 = min([win.y0] + [b.y0 for b in boxes])
    x1 = max([win.x1] + [b.x1 for b in boxes])
    y1 = max([win.y1] + [b.y1 for b in boxes])
    # anchor the lattice on the grid so every entry is a union of cells
    cell = cell / 2 if (cmap.grid.sx != 0 or cmap.grid.sy != 0) else cell
    ax = float(shift_of(-60, cmap.grid.sx)) if cmap.grid.sx != 0 else 0.0
    ay = float(shift_of(-60, cmap.grid.sy)) if cmap.grid.sy != 0 else 0.0
    x0 = ax + math.floor((x0 - ax) / cell) * cell
    y0 = ay + math.floor((y0 - ay) / cell) * cell
    nx = math.ceil((x1 - x0) / cell - 1e-9)
    ny = math.ceil((y1 - y0) / cell - 1e-9)
    if nx * ny > 2**24:
        raise ValueError("union strategy lattice too large")
    return OpenSet(np.zeros((nx, ny), dtype=bool), x0, y0, cell)


def _union_value(cmap, base: OpenSet, rects) -> tuple[float, OpenSet]:
    om = base.like(np.zeros_like(base.mask))
    for r in rects:
        om.add(r)
    return carleson_sum(cmap, om), om


STRATEGIES = ("single", "greedy", "exhaustive", "user")


def bmo_biparam_map(cmap: HaarCoefficientMap, strategy: str = "single", omegas=None, top: int = 40, m: int = 3, max_steps: int = 30) -> BmoEstimate:
    """Lower-bound BMO estimate on one grid from a coefficient map."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy}")
    if len(cmap) == 0 or not np.any(cmap.values):
        return BmoEstimate(0.0, None, strategy, cmap.grid.label)
    if strategy == "user":
        best, arg = 0.0, None
        for om in omegas or ():
            v = carleson_sum(cmap, om)
            if v > best:
                best, arg = v, om
        return BmoEstimate(best, arg, strategy, cmap.grid.label, {"candidates": len(omegas or ())})
    value, R, rows = _best_single(cmap)
    if strategy == "single":
        return BmoEstimate(value, R.rect(), strategy, cmap.grid.label, {"rect": _rect_meta(R)})
    order = np.argsort(-rows[:, 4])[:top]
    cands = [_rect_of(rows[i], cmap.grid) for i in order]
    base = _lattice_for(cmap, cands)
    if strategy == "greedy":
        chosen = [R]
        cur, om = _union_value(cmap, base, chosen)
        for _ in range(max_steps):
            best_step = None
            for c in cands:
                if c in chosen:
                    continue
                v, o = _union_value(cmap, base, chosen + [c])
                if v > cur + 1e-15 and (best_step is None or v > best_step[0]):
                    best_step = (v, c, o)
            if best_step is None:
                break
            cur, c, om = best_step
            chosen.append(c)
        return BmoEstimate(cur, om, strategy, cmap.grid.label, {"rects": [_rect_meta(c) for c in chosen]})
    # exhaustive over unions of up to m of the top candidates
    pool = cands[: min(len(cands), 12)]
    best, arg, members = value, None, [R]
    for size in range(1, m + 1):
        for combo in itertools.combinations(pool, size):
            v, o = _union_value(cmap, base, list(combo))
            if v > best:
                best, arg, members = v, o, list(combo)
    if arg is None:
        _, arg = _union_value(cmap, base, [R])
        best = carleson_sum(cmap, arg)
    return BmoEstimate(best, arg, strategy, cmap.grid.label, {"rects": [_rect_meta(c) for c in members]})


def _rect_meta(R: DyadicRectangle) -> dict:
    return {"kx": R.ix.k, "jx": R.ix.j, "ky": R.iy.k, "jy": R.iy.j}


def bmo_biparam(F: ScalarField, window: Rect, kmin: int, kmax: int, strategy: str = "single", delta=DEFAULT_DELTA, omegas=None, **kw) -> BmoEstimate:
    """Max over the four grids of the strategy's estimate, coefficients in the window."""
    best = None
    for grid in GridId.all(delta):
        cmap = coefficient_table(F, window, grid, kmin, kmax)
        est = bmo_biparam_map(cmap, strategy, omegas=omegas, **kw)
        est.meta["grid_values"] = {**(best.meta.get("grid_values", {}) if best else {}), grid.label: est.value}
        if best is None or est.value > best.value:
            gv = est.meta["grid_values"]
            best = est
            best.meta["grid_values"] = gv
        else:
            best.meta["grid_values"] = est.meta["grid_values"]
    return best


def separable_single_sup(f: Factor1D, g: Factor1D, xwin, ywin, kx_range, ky_range, grid: GridId = GridId()):
    """Best single-rectangle Carleson sum for f ⊗ g; it factors into 1-D suprema.

    For Ω = I0 x J0 the sum is A(I0) B(J0) with A(I0) = |I0|^{-1} Σ_{I ⊆ I0} <f,h_I>^2.
    Returns (value, (I0 bounds), (J0 bounds)).
    """

    def best_1d(fn, lo, hi, shift, kmin, kmax):
        k, j, left, L = _axis_table(lo, hi, shift, kmin, kmax)
        c = np.concatenate([fn.haar_coeffs(left[k == s], 2.0**s) for s in np.unique(k)])
        c2 = c**2
        best, arg = 0.0, None
        for K in range(kmin, kmax + 1):
            m = k <= K
            anc = _ancestor(left[m], L[m], K, shift)
            u, inv = np.unique(anc, return_inverse=True)
            s = np.bincount(inv, weights=c2[m]) / 2.0**K
            i = int(np.argmax(s))
            if s[i] > best:
                off = float(shift_of(K, shift)) if shift != 0 else 0.0
                best, arg = float(s[i]), (off + 2.0**K * u[i], off + 2.0**K * (u[i] + 1))
        return best, arg

    A, I0 = best_1d(f, xwin[0], xwin[1], grid.sx, *kx_range)
    B, J0 = best_1d(g, ywin[0], ywin[1], grid.sy, *ky_range)
    return math.sqrt(A * B), I0, J0


# ---------------------------------------------------------------------------
# Sobolev norms


def _padded_spectrum(F: GridSamples, pad: int = 2):
    n = F.n
    N = pad * n
    buf = np.zeros((N, N))
    buf[:n, :n] = F.values
    freqs = np.fft.fftfreq(N, d=F.h)
    return np.fft.fft2(buf), freqs, N


def high_band_fraction(F: GridSamples) -> float:
    """Share of spectral energy above half the Nyquist frequency on either axis."""
    spec, freqs, N = _padded_spectrum(F)
    ny = 0.5 / F.h
    hi = np.abs(freqs) > 0.5 * ny
    mask = hi[:, None] | hi[None, :]
    e = np.abs(spec) ** 2
    tot = e.sum()
    return float(e[mask].sum() / tot) if tot > 0 else 0.0


def lp_grid(values: np.ndarray, h: float, p: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(values))) if values.size else 0.0
    return float((np.sum(np.abs(values) ** p) * h * h) ** (1.0 / p))


def sobolev_norm(F: GridSamples, s: float, p: float, band_tol: float | None = None) -> float:
    """‖(1-Δ)^{s/2} F‖_p via the Bessel multiplier on a 2x zero-padded grid."""
    if not (0.0 <= s <= 1.0):
        raise ValueError("s must lie in [0, 1]")
    if not (1.0 < p <= math.inf):
        raise ValueError("p must exceed 1")
    if band_tol is not None:
        frac = high_band_fraction(F)
        if frac > band_tol:
            raise ResolutionError(f"{frac:.3g} of the spectral energy sits above half Nyquist")
    if s == 0.0:
        return lp_grid(F.values, F.h, p)
    spec, freqs, N = _padded_spectrum(F)
    xi = 2.0 * math.pi * freqs
    mult = (1.0 + xi[:, None] ** 2 + xi[None, :] ** 2) ** (s / 2.0)
    out = np.real(np.fft.ifft2(spec * mult))
    return lp_grid(out, F.h, p)


def sobolev_fd(F: GridSamples, p: float) -> float:
    """‖F‖_p + ‖∂_x F‖_p + ‖∂_y F‖_p with forward differences (zero outside the window)."""
    v = np.pad(F.values, 1)
    dx = np.diff(v, axis=0)[:, 1:-1] / F.h
    dy = np.diff(v, axis=1)[1:-1, :] / F.h
    return lp_grid(F.values, F.h, p) + lp_grid(dx, F.h, p) + lp_grid(dy, F.h, p)


def separable_w1p(f: Factor1D, g: Factor1D, p: float) -> dict:
    """Exact W^{1,p} pieces of f ⊗ g: ‖F‖_p, ‖∂_x F‖_p, ‖∂_y F‖_p and their sum."""
    fp, gp = f.lp_norm(p), g.lp_norm(p)
    dfp, dgp = f.lp_norm(p, deriv=True), g.lp_norm(p, deriv=True)
    parts = {"F": fp * gp, "dx": dfp * gp, "dy": fp * dgp}
    parts["w1p"] = parts["F"] + parts["dx"] + parts["dy"]
    return parts
