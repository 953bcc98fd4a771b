"""Composition with rotations, directional Hilbert transforms, T_Omega, and the
two rotation counterexamples built on them.

Rotation convention: phi(x, y) = (x cos t - y sin t, x sin t + y cos t), and
(F o phi)(p) = F(phi(p)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from .dyadic import DyadicInterval, DyadicRectangle, GridId, index_range
from .geometry import Rect, RotatedRect, rotate
from .haar import (
    ClosedExpr,
    Constant,
    GridSamples,
    Indicator,
    PolygonIndicator,
    PowerTail,
    ScalarField,
    SeparableExpr,
    PolyBump,
    SmoothHaar,
    SumField,
    Trig,
    gauss_box_integral,
)
from .norms import bmo_1d, bmo_biparam, separable_single_sup, separable_w1p, sobolev_norm, structured_family
from .rotated_inner import is_axis_angle


class WindowError(ValueError):
    """The requested output window does not hold the rotated support."""


# ---------------------------------------------------------------------------
# composition


def _rotate_halfplane(hp, theta):
    (nx, ny), c = hp
    m = rotate((nx, ny), -theta)  # n . phi(p) = (phi^T n) . p
    return ((m.x, m.y), c)


def _indicator_halfplanes(F: SeparableExpr):
    """Half-planes of an indicator-type separable field, or None."""
    hps = []
    for fac, axis in ((F.f, (1.0, 0.0)), (F.g, (0.0, 1.0))):
        if isinstance(fac, Indicator):
            hps.append((axis, fac.b))
            hps.append(((-axis[0], -axis[1]), -fac.a))
        elif not isinstance(fac, Constant):
            return None
    return hps


def _height(F: SeparableExpr) -> float:
    h = 1.0
    for fac in (F.f, F.g):
        if isinstance(fac, Constant):
            h *= fac.c
    return h


@dataclass(frozen=True)
class RotatedField(ScalarField):
    """Pullback of a closed-form field; box integrals by adaptive quadrature."""

    base: ScalarField
    theta: float
    rtol: float = 1e-7

    def __call__(self, x, y):
        c, s = math.cos(self.theta), math.sin(self.theta)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.base(c * x - s * y, s * x + c * y)

    def rect_integral(self, x0, x1, y0, y1):
        return gauss_box_integral(self, x0, x1, y0, y1, rtol=self.rtol, max_nodes=2048)


def _resample(F: GridSamples, theta: float, window: Rect | None) -> GridSamples:
    src = F.window()
    support = RotatedRect(src, -theta)  # F o phi lives on phi^{-1}(window)
    pts = support.corners()
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    need = Rect(min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys))
    if window is None:
        side = max(need.w, need.h)
        window = Rect(need.x0, need.y0, side, side)
    elif not window.contains_rect(need, tol=1e-9 * max(need.w, need.h)):
        raise WindowError(f"rotated support {need} exceeds window {window}")
    n = max(1, int(round(window.w / F.h)))
    h = window.w / n
    t = window.x0 + h * (np.arange(n) + 0.5)
    u = window.y0 + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(t, u, indexing="ij")
    c, s = math.cos(theta), math.sin(theta)
    PX, PY = c * X - s * Y, s * X + c * Y
    # fractional cell-center indices in the source grid
    ci = (PX - F.x0) / F.h - 0.5
    cj = (PY - F.y0) / F.h - 0.5
    vals = map_coordinates(F.values, [ci, cj], order=1, mode="constant", cval=0.0)
    return GridSamples(vals, window.x0, window.y0, window.w)


def compose_rotation(F: ScalarField, theta: float, window: Rect | None = None) -> ScalarField:
    """F o phi^theta.

    Indicator-type fields come back as exact polygon indicators, other
    closed-form fields as an evaluation pullback, and GridSamples are
    resampled bilinearly onto a window holding the rotated support.
    """
    if isinstance(F, GridSamples):
        if theta == 0.0 and window is None:
            return F
        return _resample(F, theta, window)
    if theta == 0.0:
        return F
    if isinstance(F, PolygonIndicator):
        return PolygonIndicator(tuple(_rotate_halfplane(h, theta) for h in F.halfplanes), F.height)
    if isinstance(F, SeparableExpr):
        hps = _indicator_halfplanes(F)
        if hps is not None:
            return PolygonIndicator(tuple(_rotate_halfplane(h, theta) for h in hps), _height(F))
    if isinstance(F, RotatedField):
        return RotatedField(F.base, F.theta + theta, F.rtol)
    return RotatedField(F, theta)


# ---------------------------------------------------------------------------
# spectral operators


def _frequencies(F: GridSamples, pad: int):
    N = pad * F.n
    xi = 2.0 * math.pi * np.fft.fftfreq(N, d=F.h)
    nyq = np.zeros(N, dtype=bool)
    if N % 2 == 0:
        nyq[N // 2] = True
    return xi, nyq, N


def _apply_multiplier(F: GridSamples, mult_fn: Callable, pad: int) -> GridSamples:
    xi, nyq, N = _frequencies(F, pad)
    buf = np.zeros((N, N))
    buf[: F.n, : F.n] = F.values
    spec = np.fft.fft2(buf)
    m = mult_fn(xi[:, None], xi[None, :])
    # the Nyquist row and column have no sign partner; drop them
    m = np.where(nyq[:, None] | nyq[None, :], 0.0, m)
    out = np.fft.ifft2(spec * m)
    return GridSamples(np.real(out[: F.n, : F.n]), F.x0, F.y0, F.side)


def directional_hilbert(F: GridSamples, v, pad: int = 1) -> GridSamples:
    """H_v F through the multiplier -i sgn(v . xi).

    The grid is treated as periodic after zero-padding by `pad`; pad=1 is the
    periodic transform, larger pads approximate the transform on R^2.
    """
    vx, vy = float(v[0]), float(v[1])
    nrm = math.hypot(vx, vy)
    if not nrm:
        raise ValueError("direction must be nonzero")
    vx, vy = vx / nrm, vy / nrm
    # cos(pi/2) is 6e-17, not 0; a stray sign on the axis line is an O(1) error there
    vx, vy = (0.0 if abs(t) < 1e-12 else t for t in (vx, vy))
    return _apply_multiplier(F, lambda a, b: -1j * np.sign(vx * a + vy * b), pad)


def _kernel_nodes(kernel, n_theta: int):
    ang = (np.arange(n_theta) + 0.5) * (2.0 * math.pi / n_theta)
    if callable(kernel):
        vals = np.asarray([kernel(a) for a in ang], dtype=float)
    else:
        vals = np.asarray(kernel, dtype=float)
        if vals.shape != (n_theta,):
            raise ValueError(f"expected {n_theta} kernel samples")
    return ang, vals


def rough_operator(F: GridSamples, kernel, n_theta: int = 256, pad: int = 1, mean_tol: float = 1e-10) -> GridSamples:
    """T_Omega F = 1/2 int_{S^1} Omega(v) H_v F dv by the midpoint rule.

    `kernel` is a callable of the angle or n_theta samples at the midpoint
    nodes.  The weighted directional multipliers are summed first, so one FFT
    pair suffices.
    """
    ang, vals = _kernel_nodes(kernel, n_theta)
    dv = 2.0 * math.pi / n_theta
    if abs(vals.sum() * dv) > mean_tol:
        raise ValueError(f"kernel mean {vals.sum() * dv:.3e} is not zero")
    cs, sn, w = np.cos(ang), np.sin(ang), 0.5 * vals * dv

    def mult(a, b):
        acc = np.zeros(np.broadcast(a, b).shape, dtype=complex)
        for c, s, wi in zip(cs, sn, w):
            if wi:
                acc += wi * (-1j) * np.sign(c * a + s * b)
        return acc

    return _apply_multiplier(F, mult, pad)


def kernel_l1(kernel, n_theta: int = 256) -> float:
    _, vals = _kernel_nodes(kernel, n_theta)
    return float(np.abs(vals).sum() * 2.0 * math.pi / n_theta)


# ---------------------------------------------------------------------------
# rotation counterexample for indicator strips


def strip_field(theta: float) -> ScalarField:
    """1_[0,1](x) composed with phi^theta: a strip of width 1."""
    return compose_rotation(SeparableExpr(Indicator(0.0, 1.0), Constant(1.0)), theta)


def _quadrant_areas(F: PolygonIndicator, r: Rect):
    xm, ym = r.x0 + 0.5 * r.w, r.y0 + 0.5 * r.h
    return (
        F.rect_integral(r.x0, xm, r.y0, ym),
        F.rect_integral(xm, r.x1, r.y0, ym),
        F.rect_integral(r.x0, xm, ym, r.y1),
        F.rect_integral(xm, r.x1, ym, r.y1),
    )


@dataclass(frozen=True)
class Witness:
    theta: float
    R: DyadicRectangle | None
    value: float  # |<F o phi, h_R>| / |R|^{1/2} = |S ∩ R| / |R| on a single quadrant
    quadrant: int
    trace: tuple = field(default=(), compare=False)

    @property
    def passed(self) -> bool:
        return self.R is not None and self.value >= 1.0 / 16.0

    def as_dict(self) -> dict:
        r = self.R.rect() if self.R is not None else None
        return {
            "theta": self.theta,
            "value": self.value,
            "threshold": 1.0 / 16.0,
            "pass": self.passed,
            "rect": None if r is None else {"x0": r.x0, "y0": r.y0, "w": r.w, "h": r.h},
            "quadrant": self.quadrant,
        }


def _cells_on_line(nx: float, ny: float, c: float, window: Rect, grid: GridId, k: int, l: int) -> set:
    """Grid rectangles of size 2^k x 2^l met by the line nx*x + ny*y = c inside the window."""
    out = set()
    L = 2.0**k
    cols = index_range(window.x0, window.x1, k, grid.sx)
    for jx in cols:
        I = DyadicInterval(k, jx, grid.sx)
        a, b = I.bounds()
        if abs(ny) < 1e-15:
            continue
        y1, y2 = sorted(((c - nx * a) / ny, (c - nx * b) / ny))
        y1, y2 = max(y1, window.y0), min(y2, window.y1)
        if y1 > y2:
            continue
        for jy in index_range(y1 - 1e-12 * L, y2 + 1e-12 * L, l, grid.sy):
            out.add(DyadicRectangle(I, DyadicInterval(l, jy, grid.sy)))
    return out


def counterexample1(theta: float, scales: Sequence[int] = range(-3, -11, -1), span: float = 1.0, exhaustive: bool = False) -> Witness:
    """Search for R with S ∩ R inside one quadrant of R covering at least |R|/16.

    Only rectangles crossed by the two boundary lines of the strip are
    examined, over the four shifted grids.  For each horizontal scale k the
    vertical scale follows the strip slope, so the eccentricity matches
    |cot theta| within a factor 2.  Values are exact polygon areas.  The
    search stops after the first scale that yields a witness unless
    `exhaustive` is set.
    """
    if is_axis_angle(theta) or not (0.0 < theta < 2.0 * math.pi):
        raise ValueError("theta must avoid 0, pi/2, pi, 3pi/2")
    F = strip_field(theta)
    c, s = math.cos(theta), math.sin(theta)
    slope = abs(c / s)
    window = Rect(-span, -span, 2 * span, 2 * span)
    best = (0.0, None, -1)
    trace = []
    for k in scales:
        for dl in (0, -1, 1):
            l = k + round(math.log2(slope)) + dl
            for grid in GridId.all():
                cells = _cells_on_line(c, -s, 0.0, window, grid, k, l) | _cells_on_line(c, -s, 1.0, window, grid, k, l)
                found = 0
                for R in sorted(cells, key=lambda r: (r.ix.j, r.iy.j)):
                    r = R.rect()
                    q = _quadrant_areas(F, r)
                    hit = [i for i, a in enumerate(q) if a > 1e-15 * r.area]
                    if len(hit) != 1:
                        continue
                    found += 1
                    v = q[hit[0]] / r.area
                    if v > best[0] + 1e-15:
                        best = (v, R, hit[0])
                trace.append({"k": k, "l": l, "grid": grid.label, "single_quadrant": found, "best": best[0]})
        if best[0] >= 1.0 / 16.0 and not exhaustive:
            break
    return Witness(theta, best[1], best[0], best[2], tuple(trace))


def quadrature_value(F: ScalarField, R, n: int = 4096, chunk: int = 256) -> float:
    """|<F, h_R>| / |R|^{1/2} by the midpoint rule on an n x n split of R."""
    r = R.rect() if isinstance(R, DyadicRectangle) else R
    hx, hy = r.w / n, r.h / n
    xs = r.x0 + hx * (np.arange(n) + 0.5)
    ys = r.y0 + hy * (np.arange(n) + 0.5)
    sx = np.where(np.arange(n) < n // 2, 1.0, -1.0)
    sy = sx
    acc = 0.0
    for i in range(0, n, chunk):
        X, Y = np.meshgrid(xs[i : i + chunk], ys, indexing="ij")
        acc += float(sx[i : i + chunk] @ np.asarray(F(X, Y), dtype=float) @ sy)
    return abs(acc) / (n * n)


# ---------------------------------------------------------------------------
# smooth counterexample with a power tail


LEMMA_C_RECT = Rect(1.0, -1.0, 0.5, 1.0)


def tail_field(p: float, width: float = 0.125) -> SeparableExpr:
    """psi(x) g(y) with psi a smooth Haar function on [1, 2] and g(y) = min(1, |y|^{-2/p})."""
    return SeparableExpr(SmoothHaar(1.0, 2.0, width), PowerTail(2.0 / p))


def smooth_haar_constants(width: float = 0.125) -> tuple[float, float]:
    """Q = max(||psi||_2, ||psi||_inf) and Q' = max(||psi'||_2, ||psi'||_inf)."""
    f = SmoothHaar(1.0, 2.0, width)
    Q = max(f.lp_norm(2), f.lp_norm(math.inf))
    Qp = max(f.lp_norm(2, deriv=True), f.lp_norm(math.inf, deriv=True))
    return Q, Qp


def rotated_tail_value(p: float, theta: float = math.pi / 4, rect: Rect = LEMMA_C_RECT, width: float = 0.125, nodes: int = 96) -> float:
    """|<F o phi, h_R>| / |R|^{1/2} for the tail field, by tensor Gauss per quadrant."""
    F = compose_rotation(tail_field(p, width), theta)
    x, w = np.polynomial.legendre.leggauss(nodes)
    tot = 0.0
    for q, sign in rect.quadrants():
        xs = q.x0 + 0.5 * (x + 1) * q.w
        ys = q.y0 + 0.5 * (x + 1) * q.h
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        tot += sign * float(w @ F(X, Y) @ w) * q.w * q.h / 4
    return abs(tot) / rect.area


def tail_bmo(p: float, width: float = 0.125, ky=(-3, 12), kx=(-6, 2)) -> float:
    """Single-rectangle lower-bound BMO estimate of the tail field over the four grids."""
    f, g = tail_field(p, width).f, tail_field(p, width).g
    best = 0.0
    for grid in GridId.all():
        v, _, _ = separable_single_sup(f, g, (-2.0, 6.0), (-(2.0 ** ky[1]), 2.0 ** ky[1]), kx, ky, grid)
        best = max(best, v)
    return best


def tail_bmo_1d(p: float) -> float:
    """BMO of the tail factor over the structured interval family."""
    return bmo_1d(PowerTail(2.0 / p), structured_family()).value


@dataclass(frozen=True)
class TailRow:
    p: float
    w1p: float
    c1: float
    bmo: float
    lower: float
    epsilon_needed: float  # smallest Sobolev coefficient compatible with C(theta) = c_theta

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "alpha": 2.0 / self.p,
            "w1p": self.w1p,
            "C1": self.c1,
            "lemma_A": self.w1p <= self.c1,
            "bmo": self.bmo,
            "lower": self.lower,
            "lemma_C": self.lower >= 1.0 / 32.0,
            "epsilon_needed": self.epsilon_needed,
        }


def counterexample2_row(p: float, theta: float = math.pi / 4, c_theta: float = 1.0, width: float = 0.125) -> TailRow:
    if p < 4:
        raise ValueError("p must be at least 4")
    F = tail_field(p, width)
    Q, Qp = smooth_haar_constants(width)
    w1p = separable_w1p(F.f, F.g, p)["w1p"]
    bmo = tail_bmo(p, width)
    lower = rotated_tail_value(p, theta, width=width)
    eps = max(0.0, (lower - c_theta * bmo) / w1p)
    return TailRow(p, w1p, 8 * (Q + Qp), bmo, lower, eps)


# ---------------------------------------------------------------------------
# interpolation inequality sweeps


def _tail_cutoff(p: float):
    g = PowerTail(2.0 / p)
    cut = PolyBump(0.0, 3.5, 3)
    f = SmoothHaar(1.0, 2.0, 0.125)
    return ClosedExpr(lambda x, y: f(x) * g(y) * cut(y))


def desk_family(p: float = 4.0) -> dict:
    """Five smooth test fields supported in [-4, 4]^2."""
    bump = SeparableExpr(PolyBump(0.0, 1.0, 3), PolyBump(0.0, 1.0, 3))
    flat = SeparableExpr(PolyBump(0.5, 2.0, 3), PolyBump(-0.25, 0.25, 3))
    haar2 = SeparableExpr(SmoothHaar(-1.0, 1.0, 0.25), SmoothHaar(-0.5, 0.5, 0.25))
    rotated = SumField((compose_rotation(haar2, 0.4), compose_rotation(haar2, -1.1)), (1.0, 0.5))
    wave = SeparableExpr(Trig(3 * math.pi), PolyBump(0.0, 1.5, 4))
    wave = ClosedExpr(lambda x, y, w=wave: w(x, y) * PolyBump(0.0, 1.5, 4)(x))
    return {
        "bump": bump,
        "flat-bump": flat,
        "tail": _tail_cutoff(p),
        "rotated-haar": rotated,
        "wave-bump": wave,
    }


def sample_field(F: ScalarField, side: float = 8.0, n: int = 256) -> GridSamples:
    """Midpoint samples on the centered square of the given side."""
    return GridSamples.sample(F, n, -side / 2, -side / 2, side, exact=False)


def bmo_estimate(G: GridSamples, kmin: int = -4, kmax: int = 2) -> float:
    return bmo_biparam(G, G.window(), kmin, kmax, "single").value


@dataclass(frozen=True)
class InterpolationRow:
    field: str
    theta: float
    epsilon: float
    lhs: float  # BMO estimate of F o phi
    bmo: float
    sobolev: float
    term_bmo: float  # eps^{-1}(1 + log eps^{-1}) ||F||_BMO
    term_sobolev: float  # eps^{gamma/2} ||F||_{W^{s,p}}
    c_min: float  # smallest C making the additive inequality hold
    c_product: float  # same for ||F||^alpha ||F||^{1-alpha}
    c_hilbert: float  # same for ||H_v F|| against the alpha^2 product

    FIELDS = ("version", "field", "theta", "epsilon", "lhs", "bmo", "sobolev", "term_bmo", "term_sobolev", "c_min", "c_product", "c_hilbert")

    def row(self) -> dict:
        d = {k: getattr(self, k) for k in self.FIELDS[1:]}
        return {"version": 1, **d}


def interpolation_sweep(thetas, epsilons, p: float = 4.0, s: float = 1.0, gamma: float | None = None, family: dict | None = None, n: int = 256, side: float = 8.0) -> list[InterpolationRow]:
    """Evaluate both sides of the additive and product inequalities over a field family."""
    delta = min(s - 2.0 / p, 1.0 / p)
    if delta <= 0:
        raise ValueError("need s > 2/p")
    gamma = 0.8 * delta if gamma is None else gamma
    if not 0 < gamma < delta:
        raise ValueError(f"gamma must lie in (0, {delta})")
    if any(not 0 < e < 1 for e in epsilons):
        raise ValueError("epsilon must lie in (0, 1)")
    alpha = delta / (2 + delta)
    family = desk_family(p) if family is None else family
    rows = []
    for name, F in family.items():
        G = sample_field(F, side, n)
        B = bmo_estimate(G)
        W = sobolev_norm(G, s, p)
        for theta in thetas:
            lhs = bmo_estimate(sample_field(compose_rotation(F, theta), side, n))
            hv = bmo_estimate(directional_hilbert(G, (math.cos(theta), math.sin(theta)), pad=2))
            cp = lhs / (B**alpha * W ** (1 - alpha))
            ch = hv / (B ** (alpha**2) * W ** (1 - alpha**2))
            for eps in epsilons:
                t1 = (1 + math.log(1 / eps)) / eps * B
                t2 = eps ** (gamma / 2) * W
                rows.append(InterpolationRow(name, theta, eps, lhs, B, W, t1, t2, lhs / (t1 + t2), cp, ch))
    return rows
