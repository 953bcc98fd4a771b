"""Counting numbers, Γ sums and the cancellation-table bounds.

A configuration fixes a sub-maximal rectangle K_max (axis-parallel, grid
D^0), an angle, a Journé level l and four scales: R has sides 2^r1 x 2^r2
in the grid beta chosen from phi(K_max), K has sides 2^k1 x 2^k2 inside
K_max.  Everything here is computed by explicit enumeration.

    Γ = sum_K ( sum_R |<h_R o phi, h_K>|^p' )^(2/p')
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .dyadic import (
    DyadicInterval,
    DyadicRectangle,
    GridId,
    cover_rectangle,
    enumerate_rectangles,
    iter_subrectangles,
)
from .geometry import Rect, RotatedRect, box_polygon_area, point_in_convex, segment_meets_rect, segments_and_tops
from .norms import OpenSet, coefficient_table
from .haar import coeff
from .rotated_inner import classify, inner_product, is_axis_angle, prop1_bound

MAX_PAIRS = 2_000_000
MAX_SCAN = 1_000_000
NONTRIVIAL = -1e-12  # negative tolerance: segments must enter the open rectangle


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# grid choice and configurations


@dataclass(frozen=True)
class GridChoice:
    grid: GridId
    Q: DyadicRectangle
    Q1: float
    Q2: float


def bbox_of(pts) -> Rect:
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return Rect(min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys))


def choose_grid(K_max: DyadicRectangle, theta: float) -> GridChoice:
    """The grid beta and the rectangle Q ⊇ phi(K_max) it provides."""
    box = bbox_of(RotatedRect(K_max.rect(), theta).corners())
    grid, Q, _ = cover_rectangle(box)
    return GridChoice(grid, Q, float(Q.ix.length), float(Q.iy.length))


def r1_min(K_max: DyadicRectangle, theta: float, l: int) -> int:
    """Smallest r1 with 2^{-l} 2^{r1} >= K^1 / (2|cos|)."""
    need = 2.0**l * 0.5 * float(K_max.ix.length) / abs(math.cos(theta))
    return math.ceil(math.log2(need) - 1e-12)


@dataclass(frozen=True)
class LambdaConfig:
    K_max_i: DyadicRectangle
    r1: int
    r2: int
    k1: int
    k2: int
    theta: float
    l: int
    omega_tilde: Optional[OpenSet] = None  # None: exclude R ⊆ phi(2^l K_max)
    p: float = 4.0

    @property
    def p_prime(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def q(self) -> float:
        return 2.0 / self.p_prime

    def grid_choice(self) -> GridChoice:
        return choose_grid(self.K_max_i, self.theta)

    def admissible(self) -> bool:
        K1, K2 = self.K_max_i.ix.k, self.K_max_i.iy.k
        d = self.k2 - self.k1
        return self.k1 <= K1 and self.k2 <= K2 and -(self.l - 3) <= d <= self.l - 3

    def check(self):
        if not self.admissible():
            raise ConfigError(f"inadmissible scales {self}")
        if not 2 <= self.p < math.inf:
            raise ConfigError("p must lie in [2, inf)")

    @property
    def n_K(self) -> int:
        return 2 ** (self.K_max_i.ix.k - self.k1) * 2 ** (self.K_max_i.iy.k - self.k2)

    def excluded(self) -> Callable[[Rect], bool]:
        """Predicate for R ⊆ enlarged set (those R are left out of Γ)."""
        if self.omega_tilde is not None:
            S = self.omega_tilde
            return lambda r: S.contains(r)
        big = RotatedRect(self.K_max_i.rect().dilate(2.0**self.l), self.theta).corners()
        return lambda r: all(point_in_convex(c, big, tol=0.0) for c in r.corners())


def random_config(rng, l_range=(4, 10), k_span: int = 2, r2_span: int = 4, p: float = 4.0, margin: float = 1e-3) -> LambdaConfig:
    """A random admissible configuration obeying the first necessary condition and |Q1| <= 2^{r1}/2."""
    while True:
        kx, ky = (int(v) for v in rng.integers(-2, 2, size=2))
        jx, jy = (int(v) for v in rng.integers(-2, 3, size=2))
        K_max = DyadicRectangle(DyadicInterval(kx, jx), DyadicInterval(ky, jy))
        theta = float(rng.uniform(margin, math.pi / 2 - margin))
        c, s = math.cos(theta), math.sin(theta)
        if 2.0**kx / c > 2.0**ky / s:
            continue
        l = int(rng.integers(l_range[0], l_range[1] + 1))
        k1 = int(rng.integers(kx - k_span, kx + 1))
        k2 = int(rng.integers(ky - k_span, ky + 1))
        if abs(k2 - k1) > l - 3:
            continue
        gc = choose_grid(K_max, theta)
        lo = max(r1_min(K_max, theta, l), math.ceil(math.log2(2 * gc.Q1) - 1e-12))
        r1 = lo + int(rng.integers(0, 3))
        top = math.ceil(math.log2(2 * gc.Q2) - 1e-12)
        r2 = int(rng.integers(min(k1, k2) - r2_span, top + 2))
        return LambdaConfig(K_max, r1, r2, k1, k2, theta, l, None, p)


# ---------------------------------------------------------------------------
# enumeration


def _candidates(poly, grid: GridId, r1: int, r2: int) -> list[DyadicRectangle]:
    box = bbox_of(poly)
    return enumerate_rectangles(box, grid, r1, r2)


def _crosses(poly, r: Rect) -> bool:
    """Positive-area overlap of a convex polygon with r."""
    return box_polygon_area(poly, r.x0, r.y0, r.x1, r.y1) > 1e-14 * r.area


def _rect_segments(r: Rect):
    xm, ym = r.x0 + 0.5 * r.w, r.y0 + 0.5 * r.h
    vert = (((xm, r.y0), (xm, r.y1)), ((r.x1, r.y0), (r.x1, r.y1)), ((r.x0, r.y0), (r.x0, r.y1)))
    hori = (((r.x0, ym), (r.x1, ym)), ((r.x0, r.y1), (r.x1, r.y1)), ((r.x0, r.y0), (r.x1, r.y0)))
    return vert, hori


def _unrotate(p, theta):
    c, s = math.cos(theta), math.sin(theta)
    return (p[0] * c + p[1] * s, -p[0] * s + p[1] * c)


def _segments_of_R_meet_K(R: Rect, K: Rect, theta: float, which: str) -> bool:
    """Does phi^{-1} of some `which` segment of R enter the interior of K?"""
    vert, hori = _rect_segments(R)
    segs = vert if which == "vertical" else hori
    tol = NONTRIVIAL * max(K.w, K.h)
    return any(segment_meets_rect(_unrotate(a, theta), _unrotate(b, theta), K, tol) for a, b in segs)


def _segments_of_K_meet_R(K: Rect, R: Rect, theta: float, which: str) -> bool:
    segs, _ = segments_and_tops(RotatedRect(K, theta))
    tol = NONTRIVIAL * max(R.w, R.h)
    return any(segment_meets_rect(g.a, g.b, R, tol) for g in segs if g.kind == which)


def in_lambda(R: Rect, K: Rect, theta: float) -> bool:
    """Both discontinuity sets cross the other support: the pairs that can carry a nonzero product."""
    k_meets = _segments_of_K_meet_R(K, R, theta, "vertical") or _segments_of_K_meet_R(K, R, theta, "horizontal")
    if not k_meets:
        return False
    return _segments_of_R_meet_K(R, K, theta, "vertical") or _segments_of_R_meet_K(R, K, theta, "horizontal")


def _tops_in(R: Rect, K: Rect, theta: float) -> bool:
    _, tops = segments_and_tops(RotatedRect(K, theta))
    tol = 1e-12 * max(R.w, R.h)
    return any(R.contains_point(t, tol) for t in tops)


@dataclass
class PairTable:
    """Per K, the R's of the configuration with a nonzero product, their values and tops flags."""

    K: list
    rows: list  # per K: list of (R, value, tops)

    @property
    def n_pairs(self) -> int:
        return sum(len(r) for r in self.rows)


def enumerate_pairs(cfg: LambdaConfig, grid: GridId | None = None) -> PairTable:
    cfg.check()
    grid = grid or cfg.grid_choice().grid
    excl = cfg.excluded()
    if cfg.n_K > MAX_PAIRS:
        raise ConfigError(f"{cfg.n_K} sub-rectangles exceed the enumeration guard")
    Ks, rows = [], []
    total = 0
    for K in iter_subrectangles(cfg.K_max_i, cfg.k1, cfg.k2):
        Kr = K.rect()
        poly = RotatedRect(Kr, cfg.theta).corners()
        row = []
        for R in _candidates(poly, grid, cfg.r1, cfg.r2):
            Rr = R.rect()
            if not _crosses(poly, Rr) or excl(Rr):
                continue
            v = inner_product(Rr, Kr, cfg.theta)
            row.append((R, v, _tops_in(Rr, Kr, cfg.theta)))
        total += len(row)
        if total > MAX_PAIRS:
            raise ConfigError("pair enumeration guard exceeded")
        Ks.append(K)
        rows.append(row)
    return PairTable(Ks, rows)


@dataclass(frozen=True)
class GammaSplit:
    total: float
    gamma0: float  # no tops of phi(K) in R
    gamma1: float  # some top of phi(K) in R
    n_pairs: int


def gamma_from_table(table: PairTable, p_prime: float, order=None) -> GammaSplit:
    q = 2.0 / p_prime
    idx = range(len(table.rows)) if order is None else order
    tot = g0 = g1 = 0.0
    for i in idx:
        row = table.rows[i]
        a = b = 0.0
        for _, v, tops in row:
            w = abs(v) ** p_prime
            if tops:
                b += w
            else:
                a += w
        tot += (a + b) ** q
        g0 += a**q
        g1 += b**q
    return GammaSplit(tot, g0, g1, table.n_pairs)


def gamma_exact(cfg: LambdaConfig, shuffle_seed: int | None = None) -> GammaSplit:
    """Γ by explicit enumeration of every (R, K), with the tops split.

    With a seed, the outer sum runs over the sub-rectangles in a random order.
    """
    table = enumerate_pairs(cfg)
    order = None
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(len(table.rows))
    return gamma_from_table(table, cfg.p_prime, order)


# ---------------------------------------------------------------------------
# counting numbers


def prop72_bounds(k1: int, k2: int, r1: int, r2: int, theta: float) -> tuple[float, float]:
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    nv = 6 * 2.0**k2 * max(c / 2.0**r2, s / 2.0**r1) + 2
    nh = 6 * 2.0**k1 * max(c / 2.0**r1, s / 2.0**r2) + 2
    return nv, nh


def explicit_segment_bounds(k1: int, k2: int, r1: int, r2: int, theta: float) -> tuple[float, float]:
    """Counting bounds with their additive constants made explicit.

    A segment with projections a, b meets at most a/2^r1 + b/2^r2 + 3 cells;
    three parallel segments triple that.  The stated bounds keep only +2,
    which three short segments sitting in different rows already exceed.
    """
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    nv = 3 * (2.0**k2 * (s / 2.0**r1 + c / 2.0**r2) + 3)
    nh = 3 * (2.0**k1 * (c / 2.0**r1 + s / 2.0**r2) + 3)
    return nv, nh


def count_segments(K: DyadicRectangle, theta: float, r1: int, r2: int, grid: GridId, exclude: Callable | None = None) -> tuple[int, int]:
    """(N^v, N^h): R in Λ met by the rotated vertical / horizontal segments of K."""
    Kr = K.rect()
    poly = RotatedRect(Kr, theta).corners()
    nv = nh = 0
    for R in _candidates(poly, grid, r1, r2):
        Rr = R.rect()
        if exclude is not None and exclude(Rr):
            continue
        if not in_lambda(Rr, Kr, theta):
            continue
        nv += _segments_of_K_meet_R(Kr, Rr, theta, "vertical")
        nh += _segments_of_K_meet_R(Kr, Rr, theta, "horizontal")
    return nv, nh


def count_segments_bruteforce(K: DyadicRectangle, theta: float, r1: int, r2: int, grid: GridId, window: Rect) -> tuple[int, int]:
    """Independent scan over every R of the window, for cross-checking."""
    Kr = K.rect()
    nv = nh = 0
    for R in enumerate_rectangles(window, grid, r1, r2):
        Rr = R.rect()
        if not in_lambda(Rr, Kr, theta):
            continue
        nv += _segments_of_K_meet_R(Kr, Rr, theta, "vertical")
        nh += _segments_of_K_meet_R(Kr, Rr, theta, "horizontal")
    return nv, nh


def prop74_bounds(K_max: DyadicRectangle, k1: int, k2: int, r2: int, theta: float) -> tuple[float, float]:
    K1, K2 = float(K_max.ix.length), float(K_max.iy.length)
    t = abs(math.tan(theta))
    ct = 1.0 / t if t else math.inf
    L = 0.0
    if t <= K2 / K1:
        L = max(L, max(K1 / 2.0**k1, K1 * t / 2.0**k2))
    if t >= K2 / K1:
        L = max(L, max(K2 * ct / 2.0**k1, K2 / 2.0**k2))
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    M = max((K2 * c + K1 * s) / 2.0**r2, 1.0)
    return L, M


def explicit_sparse_bounds(K_max: DyadicRectangle, k1: int, k2: int, r2: int, theta: float) -> tuple[float, float]:
    """L^h and M^h bounds with explicit constants (R in one column, as in the sparse setting).

    The preimage of a horizontal segment of R inside K_max has projections
    min(K1, K2|cot|) and min(K1|tan|, K2), so it meets at most their ratios to
    the cell sides plus 3 cells; three segments triple that.  The rows met by
    phi(K_max) number at most its height over 2^r2 plus 2.
    """
    K1, K2 = float(K_max.ix.length), float(K_max.iy.length)
    t = abs(math.tan(theta))
    ct = 1.0 / t if t else math.inf
    L = 3 * (min(K1, K2 * ct) / 2.0**k1 + min(K1 * t, K2) / 2.0**k2 + 3)
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    M = (K2 * c + K1 * s) / 2.0**r2 + 2
    return L, M


def count_sparse(R: DyadicRectangle, K_max_i: DyadicRectangle, theta: float, k1: int, k2: int) -> tuple[int, int]:
    """(L^h, M^h): K ⊆ K_max in Λ met by phi^{-1} of the horizontal segments of R, and the
    number of same-shape grid rectangles whose horizontal segments meet phi(K_max)."""
    Rr = R.rect()
    L = 0
    for K in iter_subrectangles(K_max_i, k1, k2):
        Kr = K.rect()
        if in_lambda(Rr, Kr, theta) and _segments_of_R_meet_K(Rr, Kr, theta, "horizontal"):
            L += 1
    Km = K_max_i.rect()
    poly = RotatedRect(Km, theta).corners()
    M = 0
    for Rp in _candidates(poly, R.grid, R.ix.k, R.iy.k):
        if _segments_of_R_meet_K(Rp.rect(), Km, theta, "horizontal"):
            M += 1
    return L, M


@dataclass
class CountingCheck:
    nv: int
    nh: int
    L: int
    M: int
    sparse: bool
    literal: tuple  # (nv, nh, L, M) bounds as stated
    explicit: tuple  # same with explicit additive constants

    def literal_ok(self) -> bool:
        return all(c <= b + 1e-9 for c, b in zip((self.nv, self.nh, self.L, self.M), self.literal))

    def explicit_ok(self) -> bool:
        return all(c <= b + 1e-9 for c, b in zip((self.nv, self.nh, self.L, self.M), self.explicit))

    def sparse_ok(self) -> bool:
        return not self.sparse or self.nv + self.nh <= 10


def counting_check(cfg: LambdaConfig, rng) -> CountingCheck:
    """Counts for a random K ⊆ K_max and a random R of Λ's shape meeting phi(K_max)."""
    gc = cfg.grid_choice()
    subs = list(iter_subrectangles(cfg.K_max_i, cfg.k1, cfg.k2))
    K = subs[int(rng.integers(len(subs)))]
    nv, nh = count_segments(K, cfg.theta, cfg.r1, cfg.r2, gc.grid, cfg.excluded())
    poly = RotatedRect(cfg.K_max_i.rect(), cfg.theta).corners()
    cands = [R for R in _candidates(poly, gc.grid, cfg.r1, cfg.r2) if _crosses(poly, R.rect())]
    L = M = 0
    if cands:
        L, M = count_sparse(cands[int(rng.integers(len(cands)))], cfg.K_max_i, cfg.theta, cfg.k1, cfg.k2)
    lit = prop72_bounds(cfg.k1, cfg.k2, cfg.r1, cfg.r2, cfg.theta) + prop74_bounds(cfg.K_max_i, cfg.k1, cfg.k2, cfg.r2, cfg.theta)
    exp = explicit_segment_bounds(cfg.k1, cfg.k2, cfg.r1, cfg.r2, cfg.theta) + explicit_sparse_bounds(cfg.K_max_i, cfg.k1, cfg.k2, cfg.r2, cfg.theta)
    return CountingCheck(nv, nh, L, M, is_sparse(cfg), lit, exp)


# ---------------------------------------------------------------------------
# cancellation table


def perfect_cancellation(cfg: LambdaConfig, gc: GridChoice | None = None) -> bool:
    """Q fits in a child of every R of this shape, so every product vanishes."""
    gc = gc or cfg.grid_choice()
    return gc.Q1 <= 0.5 * 2.0**cfg.r1 and gc.Q2 <= 0.5 * 2.0**cfg.r2


def table_predicate_zero(cfg: LambdaConfig) -> bool:
    """The table's first row: K^2|cos| + K^1|sin| <= 2^{r2-2}."""
    c, s = abs(math.cos(cfg.theta)), abs(math.sin(cfg.theta))
    K1, K2 = float(cfg.K_max_i.ix.length), float(cfg.K_max_i.iy.length)
    return K2 * c + K1 * s <= 2.0 ** (cfg.r2 - 2)


def is_sparse(cfg: LambdaConfig) -> bool:
    c, s = abs(math.cos(cfg.theta)), abs(math.sin(cfg.theta))
    return 2.0**cfg.k1 * s + 2.0**cfg.k2 * c <= 2.0**cfg.r2


def case_tag(cfg: LambdaConfig, gc: GridChoice | None = None) -> str:
    if perfect_cancellation(cfg, gc):
        return "zero"
    c, s, t = abs(math.cos(cfg.theta)), abs(math.sin(cfg.theta)), abs(math.tan(cfg.theta))
    slope = "tan-small" if t <= 2.0 ** (cfg.k2 - cfg.k1) else "tan-large"
    if is_sparse(cfg):
        return f"sparse/{slope}"
    if cfg.r2 <= min(cfg.k1, cfg.k2):
        a = 2.0**cfg.k1 * s >= 2.0**cfg.r2
        b = 2.0**cfg.k2 * c >= 2.0**cfg.r2
        col = {(True, True): "both", (False, True): "vertical", (True, False): "horizontal", (False, False): "neither"}[a, b]
        return f"even-low/{col}"
    return f"even-high/{slope}"


@dataclass(frozen=True)
class GammaReport:
    exact: float
    bound: float
    case_tag: str
    counts: tuple  # observed maxima (N^v, N^h, L^h, M^h)
    gamma0: float = 0.0
    gamma1: float = 0.0
    premise_ok: bool = True

    @property
    def ok(self) -> bool:
        return not math.isfinite(self.bound) or self.exact <= self.bound * (1 + 1e-9) + 1e-15

    CSV_FIELDS = ("version", "case_tag", "exact", "bound", "gamma0", "gamma1", "Nv", "Nh", "Lh", "Mh", "premise_ok")

    def row(self) -> dict:
        nv, nh, lh, mh = self.counts
        return {
            "version": 1,
            "case_tag": self.case_tag,
            "exact": repr(self.exact),
            "bound": repr(self.bound),
            "gamma0": repr(self.gamma0),
            "gamma1": repr(self.gamma1),
            "Nv": nv,
            "Nh": nh,
            "Lh": lh,
            "Mh": mh,
            "premise_ok": int(self.premise_ok),
        }


def reports_to_csv(reports: Iterable[GammaReport], extra: Iterable[dict] | None = None) -> str:
    reports = list(reports)
    extra = list(extra) if extra is not None else [{} for _ in reports]
    keys = list(GammaReport.CSV_FIELDS) + sorted({k for e in extra for k in e})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r, e in zip(reports, extra):
        w.writerow({**r.row(), **e})
    return buf.getvalue()


def _observed_counts(cfg: LambdaConfig, table: PairTable, grid: GridId) -> tuple[int, int, int, int]:
    excl = cfg.excluded()
    nv = nh = 0
    for K in table.K:
        a, b = count_segments(K, cfg.theta, cfg.r1, cfg.r2, grid, excl)
        nv, nh = max(nv, a), max(nh, b)
    lh = mh = 0
    if is_sparse(cfg):
        Rs = {R for row in table.rows for R, _, _ in row}
        for R in sorted(Rs):
            a, b = count_sparse(R, cfg.K_max_i, cfg.theta, cfg.k1, cfg.k2)
            lh, mh = max(lh, a), max(mh, b)
    return nv, nh, lh, mh


def gamma_bound(cfg: LambdaConfig, table: PairTable | None = None, counts: bool = True) -> GammaReport:
    """Evaluate the cancellation-table row selected by the configuration.

    Per-pair factors come from the cancellation estimates, counting factors
    from the explicit-constant counting bounds.  When the geometric premise of a row fails for
    some enumerated pair the per-pair factor falls back to the supremum of the
    pairwise estimate over the enumerated pairs, and premise_ok is False.
    """
    cfg.check()
    gc = cfg.grid_choice()
    table = table if table is not None else enumerate_pairs(cfg, gc.grid)
    split = gamma_from_table(table, cfg.p_prime)
    tag = case_tag(cfg, gc)
    observed = _observed_counts(cfg, table, gc.grid) if counts else (0, 0, 0, 0)
    q = cfg.q
    nK = cfg.n_K
    th = cfg.theta
    t, ct = abs(math.tan(th)), abs(1.0 / math.tan(th))
    R1, R2 = 2.0**cfg.r1, 2.0**cfg.r2
    K1, K2 = 2.0**cfg.k1, 2.0**cfg.k2
    norm = math.sqrt(R1 * R2 * K1 * K2)
    premise = True

    if tag == "zero":
        bound = 0.0
    elif tag.startswith("even-low"):
        nv_b, nh_b = explicit_segment_bounds(cfg.k1, cfg.k2, cfg.r1, cfg.r2, th)
        A_v = 3 * min(R2 * R2 * t, R1 * R1 * ct) / norm
        A_h = 3 * min(R1 * R1 * t, R2 * R2 * ct) / norm
        triv = min(R1 * R2, K1 * K2) / norm
        g0 = 2 * nK * (A_v**2 * nv_b**q + A_h**2 * nh_b**q)
        g1 = nK * min(nv_b, nh_b) ** q * triv**2
        bound = 2 ** (q - 1) * (g0 + g1)
    else:
        B_K = 3 * min(K1 * K1 * t, K2 * K2 * ct) / norm
        worst = 0.0
        for K, row in zip(table.K, table.rows):
            Kr = K.rect()
            for R, _, _ in row:
                Rr = R.rect()
                case = classify(Kr, Rr, -th)
                if case.tag not in ("no-intersection", "horizontal-only"):
                    premise = False
                    worst = max(worst, min(prop1_bound(Rr, Kr, th), prop1_bound(Kr, Rr, -th)))
        B = max(B_K, worst)
        if tag.startswith("sparse"):
            L_b, M_b = explicit_sparse_bounds(cfg.K_max_i, cfg.k1, cfg.k2, cfg.r2, th)
            bound = 2**q * B**2 * L_b * M_b
        else:
            nv_b, nh_b = explicit_segment_bounds(cfg.k1, cfg.k2, cfg.r1, cfg.r2, th)
            bound = nK * (nv_b + nh_b) ** q * B**2
    return GammaReport(split.total, bound, tag, observed, split.gamma0, split.gamma1, premise)


# ---------------------------------------------------------------------------
# error-term scan


def table2_case(r1: int, r2: int, k1: int, k2: int, theta: float) -> str:
    """Argument type I-IV of the error-term table, or 'uncovered'."""
    c, s, t = abs(math.cos(theta)), abs(math.sin(theta)), abs(math.tan(theta))
    steep = t > 2.0 ** (k2 - k1)
    orders = [
        ((r2, k1, k2, r1), ("I", "I")),
        ((r2, k2, k1, r1), ("I", "I")),
        ((k1, k2, r2, r1), ("II", "III")),
        ((k2, k1, r2, r1), ("III", "II")),
        ((k1, k2, r1, r2), ("II", "III")),
        ((k2, k1, r1, r2), ("III", "II")),
        ((k1, r2, k2, r1), ("II", None)),
        ((k2, r2, k1, r1), (None, "III")),
    ]
    for seq, (if_steep, if_flat) in orders:
        if all(a <= b for a, b in zip(seq, seq[1:])):
            pick = if_steep if steep else if_flat
            if pick is not None:
                return pick
            if seq[0] == k1:  # k1 <= r2 <= k2 <= r1, flat
                return "III" if 2.0**k2 * c <= 2.0**r2 else "IV"
            return "II" if 2.0**k1 * s <= 2.0**r2 else "IV"  # k2 <= r2 <= k1 <= r1, steep
    return "uncovered"


@dataclass(frozen=True)
class ScanResult:
    total_exact: float
    total_bound: float
    target: float  # 2^{-l mu} |K_max|
    mu: float
    n_configs: int
    all_dominated: bool
    cases: dict

    @property
    def ratio(self) -> float:
        return self.total_exact / self.target


def exp_tuples(K_max: DyadicRectangle, theta: float, l: int, k_span: int = 2, r2_below: int = 3, r1_count: int = 3):
    """The scanned part of EXP, in lexicographic order.

    r2 stops where every product vanishes (Q fits in a child of R), so only
    the ranges of r1, k1, k2 and the lower end of r2 are truncated.
    """
    gc = choose_grid(K_max, theta)
    r1_lo = max(r1_min(K_max, theta, l), math.ceil(math.log2(2 * gc.Q1) - 1e-12))
    r2_hi = math.ceil(math.log2(2 * gc.Q2) - 1e-12)
    kx, ky = K_max.ix.k, K_max.iy.k
    out = []
    for r1 in range(r1_lo, r1_lo + r1_count):
        for k1 in range(kx - k_span, kx + 1):
            for k2 in range(ky - k_span, ky + 1):
                if abs(k2 - k1) > l - 3:
                    continue
                for r2 in range(min(k1, k2) - r2_below, r2_hi):
                    out.append((r1, r2, k1, k2))
    if len(out) > MAX_SCAN:
        raise ConfigError("EXP scan exceeds the configuration cap")
    return out


def error_term_scan(K_max_i: DyadicRectangle, theta: float, l: int, p: float, gamma1: float, gamma2: float, s: float = 1.0, theta_interp: float = 0.5, with_bound: bool = True, **kw) -> ScanResult:
    """Weighted sum over EXP of Γ (exact and table bound) against 2^{-l mu}|K_max|."""
    delta = min(s - 2.0 / p, 1.0 / p)
    if not (-delta < gamma1 < delta and -delta < gamma2 < delta):
        raise ConfigError(f"gammas must lie in (-{delta:.4g}, {delta:.4g})")
    mu = 2 * gamma2 * theta_interp
    if mu <= 0:
        raise ConfigError("mu = 2 gamma2 theta must be positive (choose gamma2 > 0)")
    if is_axis_angle(theta):
        raise ConfigError("axis angles carry no cancellation")
    tot_e = tot_b = 0.0
    ok = True
    cases: dict = {}
    tuples = exp_tuples(K_max_i, theta, l, **kw)
    for r1, r2, k1, k2 in tuples:
        cfg = LambdaConfig(K_max_i, r1, r2, k1, k2, theta, l, None, p)
        w = 2.0 ** (2 * r1 * (0.5 + gamma1)) * 2.0 ** (2 * r2 * (0.5 + gamma2))
        tag = table2_case(r1, r2, k1, k2, theta)
        if with_bound:
            rep = gamma_bound(cfg, counts=False)
            ex, bd = rep.exact, rep.bound
            ok &= rep.ok
        else:
            ex, bd = gamma_exact(cfg).total, math.nan
        tot_e += w * ex
        tot_b += w * bd
        cases[tag] = cases.get(tag, 0) + 1
    target = 2.0 ** (-l * mu) * float(K_max_i.area)
    return ScanResult(tot_e, tot_b, target, mu, len(tuples), ok, cases)


def decay_slope(K_max_i: DyadicRectangle, theta: float, ls, p: float, gamma1: float, gamma2: float, s: float = 1.0, **kw):
    """Least-squares slope of -log2(total) against l, with the totals."""
    totals = [error_term_scan(K_max_i, theta, l, p, gamma1, gamma2, s, with_bound=False, **kw).total_exact for l in ls]
    slope = -np.polyfit(np.asarray(ls, float), np.log2(totals), 1)[0]
    return float(slope), totals


# ---------------------------------------------------------------------------
# perfect cancellation


def perfect_cancellation_pair(rng, margin: float = 1e-3):
    """(R, K, theta) with R in the grid beta, R meeting phi(K_max) and Q inside a child of R."""
    kx, ky = (int(v) for v in rng.integers(-3, 2, size=2))
    jx, jy = (int(v) for v in rng.integers(-4, 4, size=2))
    K_max = DyadicRectangle(DyadicInterval(kx, jx), DyadicInterval(ky, jy))
    theta = float(rng.uniform(margin, 2 * math.pi - margin))
    gc = choose_grid(K_max, theta)
    r1 = math.ceil(math.log2(2 * gc.Q1) - 1e-12) + int(rng.integers(0, 3))
    r2 = math.ceil(math.log2(2 * gc.Q2) - 1e-12) + int(rng.integers(0, 3))
    poly = RotatedRect(K_max.rect(), theta).corners()
    Rs = [R for R in _candidates(poly, gc.grid, r1, r2) if _crosses(poly, R.rect())]
    R = Rs[int(rng.integers(0, len(Rs)))]
    k1 = kx - int(rng.integers(0, 4))
    k2 = ky - int(rng.integers(0, 4))
    subs = list(iter_subrectangles(K_max, k1, k2))
    K = subs[int(rng.integers(0, len(subs)))]
    return R, K, theta


# ---------------------------------------------------------------------------
# coefficient decay


def eccentricity_sum(G, K0: Rect, zeta: float, kmin: int, grid: GridId = GridId()) -> float:
    """Sum of squared coefficients of G over grid rectangles K ⊆ K0 with height/width <= zeta."""
    kx_max = math.floor(math.log2(K0.w) + 1e-12)
    ky_max = math.floor(math.log2(K0.h) + 1e-12)
    cmap = coefficient_table(G, K0, grid, kmin, kx_max, kmin, ky_max)
    flat = 2.0 ** (cmap.ky - cmap.kx) <= zeta * (1 + 1e-12)
    return float(np.sum(cmap.values[flat] ** 2))


def lemma22_ratio(F, k1: int, k2: int, window: Rect, grid: GridId = GridId(), sup_norm: float | None = None) -> float:
    """max |<F, h_R>| / (||F||_inf |R|^{1/2}) over the 2^k1 x 2^k2 rectangles in the window."""
    if sup_norm is None:
        raise ConfigError("sup_norm is required")
    best = 0.0
    for R in enumerate_rectangles(window, grid, k1, k2):
        r = R.rect()
        if not window.contains_rect(r):
            continue
        best = max(best, abs(coeff(F, r)) / math.sqrt(r.area))
    return best / sup_norm


def lemma22_lp(F, k1: int, k2: int, window: Rect, p: float, grid: GridId = GridId()) -> float:
    """(sum |<F, h_R>|^p)^{1/p} over the 2^k1 x 2^k2 rectangles inside the window."""
    vals = [abs(coeff(F, R.rect())) for R in enumerate_rectangles(window, grid, k1, k2) if window.contains_rect(R.rect())]
    return float(np.sum(np.asarray(vals) ** p) ** (1.0 / p))
