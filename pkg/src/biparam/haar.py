"""Haar wavelets, scalar fields and coefficient maps.

Every field knows how to integrate itself over an axis-parallel box, and a
Haar coefficient is the signed sum of the four quadrant integrals.  Closed
forms are used wherever the field allows it; quadrature is the fallback.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .dyadic import DyadicInterval, DyadicRectangle, GridId, locate, shift_of
from .geometry import Rect, clip_vertices, shoelace


class QuadratureError(RuntimeError):
    def __init__(self, message, estimate):
        super().__init__(f"{message} (error estimate {estimate:.3e})")
        self.estimate = estimate


def _bounds(I):
    if isinstance(I, DyadicInterval):
        return I.bounds()
    a, b = I
    return float(a), float(b)


def haar_value(I, x):
    """h_I(x) = |I|^{-1/2} (1_left - 1_right); works on arrays."""
    a, b = _bounds(I)
    m = 0.5 * (a + b)
    x = np.asarray(x, dtype=float)
    amp = (b - a) ** -0.5
    out = np.where((x >= a) & (x < m), amp, 0.0) - np.where((x >= m) & (x < b), amp, 0.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# one-dimensional factors


class Factor1D:
    """A function of one variable with an exact antiderivative."""

    breakpoints: tuple = ()

    def __call__(self, x):
        raise NotImplementedError

    def antiderivative(self, x):
        raise NotImplementedError

    def derivative(self, x):
        raise NotImplementedError

    def integral(self, a, b):
        return self.antiderivative(b) - self.antiderivative(a)

    def haar_coeff(self, I) -> float:
        a, b = _bounds(I)
        m = 0.5 * (a + b)
        A = self.antiderivative(np.array([a, m, b]))
        return float((2 * A[1] - A[0] - A[2]) / math.sqrt(b - a))

    def haar_coeffs(self, lefts: np.ndarray, length: float) -> np.ndarray:
        """Coefficients for many intervals [left, left+length) at once."""
        A0 = self.antiderivative(lefts)
        A1 = self.antiderivative(lefts + 0.5 * length)
        A2 = self.antiderivative(lefts + length)
        return (2 * A1 - A0 - A2) / math.sqrt(length)

    def support(self):
        return (-math.inf, math.inf)

    def _pieces(self, a, b):
        pts = [a] + [t for t in self.breakpoints if a < t < b] + [b]
        return list(zip(pts[:-1], pts[1:]))

    def lp_norm(self, p: float, deriv: bool = False) -> float:
        """L^p norm over the support (p = inf allowed), by piecewise quadrature."""
        fn = self.derivative if deriv else self
        lo, hi = self.support()
        if math.isinf(p):
            xs = np.concatenate([np.linspace(s, t, 2001) for s, t in self._pieces(max(lo, -50), min(hi, 50))])
            return float(np.max(np.abs(fn(xs))))
        total = 0.0
        for s, t in self._pieces(lo, hi):
            v, _ = integrate.quad(lambda x: abs(float(fn(x))) ** p, s, t, limit=200, epsabs=1e-13, epsrel=1e-11)
            total += v
        return total ** (1.0 / p)


@dataclass(frozen=True)
class Indicator(Factor1D):
    a: float
    b: float

    @property
    def breakpoints(self):
        return (self.a, self.b)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return ((x >= self.a) & (x <= self.b)).astype(float)

    def antiderivative(self, x):
        return np.clip(np.asarray(x, dtype=float), self.a, self.b) - self.a

    def derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def support(self):
        return (self.a, self.b)


@dataclass(frozen=True)
class Constant(Factor1D):
    c: float = 1.0

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.c)

    def antiderivative(self, x):
        return self.c * np.asarray(x, dtype=float)

    def derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class HaarFactor(Factor1D):
    """The L^2-normalized Haar function of [a, b)."""

    a: float
    b: float

    @property
    def breakpoints(self):
        return (self.a, 0.5 * (self.a + self.b), self.b)

    def __call__(self, x):
        return haar_value((self.a, self.b), x)

    def antiderivative(self, x):
        x = np.asarray(x, dtype=float)
        m = 0.5 * (self.a + self.b)
        amp = (self.b - self.a) ** -0.5
        return amp * (np.clip(x, self.a, m) - self.a) - amp * (np.clip(x, m, self.b) - m)

    def derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def support(self):
        return (self.a, self.b)


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _smoothstep_int(t):
    # integral of the smoothstep from 0 to t, for t in [0, 1]
    t = np.clip(t, 0.0, 1.0)
    return t**3 - 0.5 * t**4


@dataclass(frozen=True)
class SmoothHaar(Factor1D):
    """C^1 variant of the Haar function of [a, b) with amplitude 1.

    +1 on the left half and -1 on the right half, with cubic smoothstep
    transitions of relative width `width` at a, the midpoint and b.  The
    profile is odd about the midpoint, so the mean is zero.
    """

    a: float = 1.0
    b: float = 2.0
    width: float = 0.125

    def __post_init__(self):
        if not (0 < self.width <= 0.5):
            raise ValueError("transition width must lie in (0, 1/2]")

    @property
    def breakpoints(self):
        L, w = self.b - self.a, self.width
        rel = (0.0, w, 0.5 - 0.5 * w, 0.5 + 0.5 * w, 1.0 - w, 1.0)
        return tuple(self.a + L * r for r in rel)

    def _profile(self, t):
        # t is the relative position in [0, 1]; returns psi(t)
        w = self.width
        up = _smoothstep(t / w)
        mid = 1.0 - 2.0 * _smoothstep((t - 0.5 + 0.5 * w) / w)
        down = _smoothstep((1.0 - t) / w)
        out = np.where(t < 0.5, np.minimum(up, mid), np.maximum(-down, mid))
        return np.where((t < 0) | (t > 1), 0.0, out)

    def __call__(self, x):
        L = self.b - self.a
        t = (np.asarray(x, dtype=float) - self.a) / L
        return self._profile(t)

    def _left_int(self, t):
        # integral of psi over [0, t] for t <= 1/2: ramp up, plateau, half ramp down
        w = self.width
        half = np.minimum(np.clip(t, 0.0, 1.0), 0.5)
        s = w * _smoothstep_int(np.minimum(half, w) / w)
        s = s + np.clip(half - w, 0.0, 0.5 - 1.5 * w)
        u = np.clip(half - (0.5 - 0.5 * w), 0.0, 0.5 * w)
        return s + u - 2.0 * w * _smoothstep_int(u / w)

    def _profile_int(self, t):
        # psi is odd about 1/2, so for t > 1/2 the integral over [0, t] is the one over [0, 1 - t]
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return np.where(t <= 0.5, self._left_int(t), self._left_int(1.0 - t))

    def antiderivative(self, x):
        L = self.b - self.a
        t = (np.asarray(x, dtype=float) - self.a) / L
        return L * self._profile_int(t)

    def derivative(self, x):
        L, w = self.b - self.a, self.width
        t = (np.asarray(x, dtype=float) - self.a) / L

        def ds(u):
            inside = (u > 0) & (u < 1)
            return np.where(inside, 6.0 * u * (1.0 - u), 0.0)

        d = ds(t / w) / w - 2.0 * ds((t - 0.5 + 0.5 * w) / w) / w + ds((1.0 - t) / w) / w
        return d / L

    def support(self):
        return (self.a, self.b)


@dataclass(frozen=True)
class PowerTail(Factor1D):
    """g(y) = 1 on [-1, 1] and |y|^(-alpha) outside."""

    alpha: float

    def __post_init__(self):
        if not (0 < self.alpha < 1):
            raise ValueError("alpha must lie in (0, 1)")

    breakpoints = (-1.0, 1.0)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        ay = np.maximum(np.abs(y), 1.0)
        return ay ** (-self.alpha)

    def _G(self, y):
        # antiderivative on [0, inf), odd extension since g is even
        a = self.alpha
        y = np.asarray(y, dtype=float)
        ay = np.abs(y)
        tail = 1.0 + (np.maximum(ay, 1.0) ** (1.0 - a) - 1.0) / (1.0 - a)
        return np.sign(y) * np.where(ay <= 1.0, ay, tail)

    def antiderivative(self, y):
        return self._G(y)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        ay = np.abs(y)
        return np.where(ay > 1.0, -self.alpha * np.sign(y) * np.maximum(ay, 1.0) ** (-self.alpha - 1.0), 0.0)

    def sq_antiderivative(self, y):
        """Antiderivative of g^2 (odd)."""
        a2 = 2.0 * self.alpha
        y = np.asarray(y, dtype=float)
        ay = np.abs(y)
        t = np.maximum(ay, 1.0)
        if abs(a2 - 1.0) < 1e-14:
            tail = 1.0 + np.log(t)
        else:
            tail = 1.0 + (t ** (1.0 - a2) - 1.0) / (1.0 - a2)
        return np.sign(y) * np.where(ay <= 1.0, ay, tail)

    def lp_norm(self, p: float, deriv: bool = False) -> float:
        a = self.alpha
        if math.isinf(p):
            return a if deriv else 1.0
        if deriv:
            # 2 a^p / (a p + p - 1)
            return (2.0 * a**p / (a * p + p - 1.0)) ** (1.0 / p)
        if a * p <= 1.0:
            return math.inf
        return (2.0 * (1.0 + 1.0 / (a * p - 1.0))) ** (1.0 / p)


@dataclass(frozen=True)
class PolyBump(Factor1D):
    """(1 - ((x-c)/r)^2)^m on |x - c| < r, optionally times (x-c)/r to kill the mean."""

    c: float = 0.0
    r: float = 1.0
    m: int = 3
    odd: bool = False

    @property
    def breakpoints(self):
        return (self.c - self.r, self.c + self.r)

    def _poly(self):
        P = np.polynomial.Polynomial([1.0, 0.0, -1.0]) ** self.m
        if self.odd:
            P = P * np.polynomial.Polynomial([0.0, 1.0])
        return P

    def __call__(self, x):
        t = (np.asarray(x, dtype=float) - self.c) / self.r
        return np.where(np.abs(t) < 1, self._poly()(t), 0.0)

    def antiderivative(self, x):
        t = np.clip((np.asarray(x, dtype=float) - self.c) / self.r, -1.0, 1.0)
        Q = self._poly().integ(lbnd=-1.0)
        return self.r * Q(t)

    def derivative(self, x):
        t = (np.asarray(x, dtype=float) - self.c) / self.r
        return np.where(np.abs(t) < 1, self._poly().deriv()(t) / self.r, 0.0)

    def support(self):
        return (self.c - self.r, self.c + self.r)


@dataclass(frozen=True)
class Trig(Factor1D):
    """cos(omega x + phase)."""

    omega: float = 2 * math.pi
    phase: float = 0.0

    def __call__(self, x):
        return np.cos(self.omega * np.asarray(x, dtype=float) + self.phase)

    def antiderivative(self, x):
        return np.sin(self.omega * np.asarray(x, dtype=float) + self.phase) / self.omega

    def derivative(self, x):
        return -self.omega * np.sin(self.omega * np.asarray(x, dtype=float) + self.phase)


# ---------------------------------------------------------------------------
# two-dimensional fields


class ScalarField:
    def __call__(self, x, y):
        raise NotImplementedError

    def rect_integral(self, x0, x1, y0, y1) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class SeparableExpr(ScalarField):
    f: Factor1D
    g: Factor1D

    def __call__(self, x, y):
        return self.f(x) * self.g(y)

    def rect_integral(self, x0, x1, y0, y1):
        return float(self.f.integral(x0, x1) * self.g.integral(y0, y1))


@dataclass(frozen=True)
class ClosedExpr(ScalarField):
    """A general callable F(x, y) (vectorized), integrated adaptively.

    `x_breaks` / `y_breaks` name kink locations that the quadrature should
    split at; `integrator`, if given, is an exact box-integral routine.
    """

    func: Callable
    x_breaks: tuple = ()
    y_breaks: tuple = ()
    integrator: Optional[Callable] = None
    rtol: float = 1e-9

    def __call__(self, x, y):
        return self.func(x, y)

    def rect_integral(self, x0, x1, y0, y1):
        if self.integrator is not None:
            return float(self.integrator(x0, x1, y0, y1))
        return gauss_box_integral(self.func, x0, x1, y0, y1, self.x_breaks, self.y_breaks, self.rtol)


def _split(a, b, breaks):
    pts = [a] + sorted(t for t in breaks if a < t < b) + [b]
    return list(zip(pts[:-1], pts[1:]))


def gauss_box_integral(func, x0, x1, y0, y1, x_breaks=(), y_breaks=(), rtol=1e-9, start=16, max_nodes=1024):
    """Tensor Gauss-Legendre on the sub-boxes cut by the break lists, doubling
    the node count until two successive values agree to `rtol`."""
    n = start
    prev = None
    while n <= max_nodes:
        nodes, weights = np.polynomial.legendre.leggauss(n)
        total = 0.0
        for a, b in _split(x0, x1, x_breaks):
            xs = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            wx = 0.5 * (b - a) * weights
            for c, d in _split(y0, y1, y_breaks):
                ys = 0.5 * (d - c) * nodes + 0.5 * (c + d)
                wy = 0.5 * (d - c) * weights
                X, Y = np.meshgrid(xs, ys, indexing="ij")
                total += float(wx @ func(X, Y) @ wy)
        if prev is not None and abs(total - prev) <= rtol * max(abs(total), 1e-300) + 1e-15 * (x1 - x0) * (y1 - y0):
            return total
        prev = total
        n *= 2
    raise QuadratureError("box quadrature did not converge", abs(total - prev))


@dataclass(frozen=True)
class PolygonIndicator(ScalarField):
    """Indicator of a convex set given as half-planes n.p <= c (value `height`).

    Box integrals are exact: clip the box polygon by each half-plane.
    """

    halfplanes: tuple
    height: float = 1.0

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.ones(np.broadcast(x, y).shape, dtype=bool)
        for (nx, ny), c in self.halfplanes:
            ok &= nx * x + ny * y <= c
        return self.height * ok

    def rect_integral(self, x0, x1, y0, y1):
        pts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        for (nx, ny), c in self.halfplanes:
            pts = clip_vertices(pts, nx, ny, c)
            if len(pts) < 3:
                return 0.0
        return self.height * max(shoelace(pts), 0.0)


@dataclass(frozen=True)
class SumField(ScalarField):
    parts: tuple
    weights: tuple = ()

    def _w(self):
        return self.weights or (1.0,) * len(self.parts)

    def __call__(self, x, y):
        return sum(w * p(x, y) for w, p in zip(self._w(), self.parts))

    def rect_integral(self, x0, x1, y0, y1):
        return sum(w * p.rect_integral(x0, x1, y0, y1) for w, p in zip(self._w(), self.parts))


@dataclass
class GridSamples(ScalarField):
    """Cell averages on an n x n grid over the square [x0, x0+side) x [y0, y0+side).

    values[i, j] is the average over the cell i along x and j along y.  The
    field is the piecewise-constant function with these cell values.
    """

    values: np.ndarray
    x0: float = 0.0
    y0: float = 0.0
    side: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("GridSamples needs a square array")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def h(self):
        return self.side / self.n

    def window(self) -> Rect:
        return Rect(self.x0, self.y0, self.side, self.side)

    def centers(self):
        t = (np.arange(self.n) + 0.5) * self.h
        return self.x0 + t, self.y0 + t

    def __call__(self, x, y):
        i = np.floor((np.asarray(x, dtype=float) - self.x0) / self.h).astype(int)
        j = np.floor((np.asarray(y, dtype=float) - self.y0) / self.h).astype(int)
        ok = (i >= 0) & (i < self.n) & (j >= 0) & (j < self.n)
        return np.where(ok, self.values[np.clip(i, 0, self.n - 1), np.clip(j, 0, self.n - 1)], 0.0)

    def _cumulative(self):
        c = getattr(self, "_cum", None)
        if c is None:
            c = np.zeros((self.n + 1, self.n + 1))
            c[1:, 1:] = np.cumsum(np.cumsum(self.values, axis=0), axis=1) * self.h * self.h
            self._cum = c
        return c

    def _cdf(self, x, y):
        # integral over [x0, x] x [y0, y]; bilinear in the cumulative table is exact
        c = self._cumulative()
        u = np.clip((np.asarray(x, dtype=float) - self.x0) / self.h, 0.0, self.n)
        v = np.clip((np.asarray(y, dtype=float) - self.y0) / self.h, 0.0, self.n)
        i = np.minimum(np.floor(u).astype(int), self.n - 1)
        j = np.minimum(np.floor(v).astype(int), self.n - 1)
        fu, fv = u - i, v - j
        return (
            c[i, j] * (1 - fu) * (1 - fv)
            + c[i + 1, j] * fu * (1 - fv)
            + c[i, j + 1] * (1 - fu) * fv
            + c[i + 1, j + 1] * fu * fv
        )

    def rect_integral(self, x0, x1, y0, y1):
        return float(self._cdf(x1, y1) - self._cdf(x0, y1) - self._cdf(x1, y0) + self._cdf(x0, y0))

    def rect_integrals(self, x0, x1, y0, y1):
        return self._cdf(x1, y1) - self._cdf(x0, y1) - self._cdf(x1, y0) + self._cdf(x0, y0)

    def l2_norm(self):
        return float(np.sqrt(np.sum(self.values**2)) * self.h)

    @classmethod
    def sample(cls, F: ScalarField, n: int, x0=0.0, y0=0.0, side=1.0, exact=True):
        """Cell averages of F (exact box integrals when available, else midpoints)."""
        h = side / n
        if exact and isinstance(F, SeparableExpr):
            ex = x0 + h * np.arange(n + 1)
            ey = y0 + h * np.arange(n + 1)
            fx = np.diff(F.f.antiderivative(ex))
            gy = np.diff(F.g.antiderivative(ey))
            return cls(np.outer(fx, gy) / (h * h), x0, y0, side)
        xs = x0 + h * (np.arange(n) + 0.5)
        ys = y0 + h * (np.arange(n) + 0.5)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return cls(F(X, Y), x0, y0, side)


def rect_bounds(R):
    if isinstance(R, DyadicRectangle):
        r = R.rect()
    else:
        r = R
    return r.x0, r.x1, r.y0, r.y1


def coeff(F: ScalarField, R) -> float:
    """<F, h_I ⊗ h_J> for the rectangle R = I x J."""
    x0, x1, y0, y1 = rect_bounds(R)
    if isinstance(F, SeparableExpr):
        return F.f.haar_coeff((x0, x1)) * F.g.haar_coeff((y0, y1))
    xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    s = (
        F.rect_integral(x0, xm, y0, ym)
        - F.rect_integral(xm, x1, y0, ym)
        - F.rect_integral(x0, xm, ym, y1)
        + F.rect_integral(xm, x1, ym, y1)
    )
    return s / math.sqrt((x1 - x0) * (y1 - y0))


def coeffs_grid(F: GridSamples, x0s, y0s, w, h) -> np.ndarray:
    """Vectorized coefficients of a sampled field on equal-size rectangles."""
    x0s = np.asarray(x0s, dtype=float)
    y0s = np.asarray(y0s, dtype=float)
    xm, ym, x1, y1 = x0s + 0.5 * w, y0s + 0.5 * h, x0s + w, y0s + h
    s = F.rect_integrals(x0s, xm, y0s, ym) - F.rect_integrals(xm, x1, y0s, ym)
    s = s - F.rect_integrals(x0s, xm, ym, y1) + F.rect_integrals(xm, x1, ym, y1)
    return s / math.sqrt(w * h)


# ---------------------------------------------------------------------------
# coefficient maps and the fast transform


@dataclass
class HaarCoefficientMap:
    """Sparse map from grid rectangles to coefficients, stored column-wise.

    `layout` (x0, y0, side, n, K) records the sample window when the map
    came from `forward`; it lets `inverse` rebuild samples.  `kernel` holds
    the part of the field that depends on one variable only.
    """

    grid: GridId
    kx: np.ndarray
    jx: np.ndarray
    ky: np.ndarray
    jy: np.ndarray
    values: np.ndarray
    layout: Optional[tuple] = None
    kernel: Optional["GridSamples"] = None

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_entries(cls, grid: GridId, entries: dict, layout=None, kernel=None):
        keys = list(entries)
        arr = lambda f: np.array([f(r) for r in keys], dtype=np.int64)
        return cls(
            grid,
            arr(lambda r: r.ix.k),
            arr(lambda r: r.ix.j),
            arr(lambda r: r.iy.k),
            arr(lambda r: r.iy.j),
            np.array([entries[r] for r in keys], dtype=float),
            layout,
            kernel,
        )

    def rectangle(self, i: int) -> DyadicRectangle:
        return DyadicRectangle(
            DyadicInterval(int(self.kx[i]), int(self.jx[i]), self.grid.sx),
            DyadicInterval(int(self.ky[i]), int(self.jy[i]), self.grid.sy),
        )

    @property
    def entries(self) -> dict:
        return {self.rectangle(i): float(self.values[i]) for i in range(len(self))}

    def get(self, R: DyadicRectangle, default=0.0) -> float:
        m = (self.kx == R.ix.k) & (self.jx == R.ix.j) & (self.ky == R.iy.k) & (self.jy == R.iy.j)
        idx = np.flatnonzero(m)
        return float(self.values[idx[0]]) if len(idx) else default

    def lefts(self):
        """Float left endpoints and lengths of every entry, per axis."""
        return _realize_axis(self.kx, self.jx, self.grid.sx), _realize_axis(self.ky, self.jy, self.grid.sy)

    def energy(self) -> float:
        return float(np.sum(self.values**2))

    def to_jsonl(self) -> str:
        lines = []
        for i in range(len(self)):
            lines.append(
                json.dumps(
                    {
                        "grid": self.grid.label,
                        "kx": int(self.kx[i]),
                        "jx": int(self.jx[i]),
                        "ky": int(self.ky[i]),
                        "jy": int(self.jy[i]),
                        "value": float(self.values[i]),
                    }
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "HaarCoefficientMap":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows:
            raise ValueError("empty coefficient stream")
        grid = GridId.from_label(rows[0]["grid"])
        col = lambda key: np.array([r[key] for r in rows], dtype=np.int64)
        return cls(grid, col("kx"), col("jx"), col("ky"), col("jy"), np.array([r["value"] for r in rows], dtype=float))


def _realize_axis(k: np.ndarray, j: np.ndarray, shift: Fraction):
    """Left endpoints (float) and lengths for arrays of (k, j) on one axis."""
    k = np.asarray(k, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    length = np.ldexp(1.0, k)
    offs = np.zeros(len(k))
    if shift != 0:
        for kk in np.unique(k):
            offs[k == kk] = float(shift_of(int(kk), shift))
    return offs + length * j, length


def _haar1d(a: np.ndarray, axis: int) -> np.ndarray:
    """Orthonormal Haar analysis along an axis; layout [mean, coarse ... fine]."""
    a = np.moveaxis(np.asarray(a, dtype=float), axis, 0).copy()
    n = a.shape[0]
    out = np.empty_like(a)
    cur = a
    while n > 1:
        even, odd = cur[0::2], cur[1::2]
        out[n // 2 : n] = (even - odd) / math.sqrt(2.0)
        cur = (even + odd) / math.sqrt(2.0)
        n //= 2
    out[0] = cur[0]
    return np.moveaxis(out, 0, axis)


def _ihaar1d(c: np.ndarray, axis: int) -> np.ndarray:
    c = np.moveaxis(np.asarray(c, dtype=float), axis, 0)
    N = c.shape[0]
    cur = c[0:1]
    n = 1
    while n < N:
        d = c[n : 2 * n]
        nxt = np.empty((2 * n,) + c.shape[1:])
        nxt[0::2] = (cur + d) / math.sqrt(2.0)
        nxt[1::2] = (cur - d) / math.sqrt(2.0)
        cur = nxt
        n *= 2
    return np.moveaxis(cur, 0, axis)


def _window_interval(x0: float, side: float, shift: Fraction) -> DyadicInterval:
    K = round(math.log2(side))
    if not math.isclose(2.0**K, side, rel_tol=0, abs_tol=1e-12 * side):
        raise ValueError(f"window side {side} is not a power of two")
    I = locate(x0 + 1e-9 * side, K, shift)
    a, _ = I.bounds()
    if abs(a - x0) > 1e-9 * side:
        raise ValueError(f"window origin {x0} is not a grid point of scale {K} (shift {shift})")
    return I


def _axis_index(I: DyadicInterval, n: int):
    """(k, j) of every detail slot m = 1..n-1 of the 1D layout under window I."""
    ks = np.empty(n - 1, dtype=np.int64)
    js = np.empty(n - 1, dtype=np.int64)
    a, _ = I.realize()
    for m in range(1, n):
        L = m.bit_length() - 1
        p = m - (1 << L)
        k = I.k - L
        left = a + Fraction(p) * (Fraction(2) ** k if k >= 0 else Fraction(1, 2 ** (-k)))
        J = locate(left, k, I.shift)
        ks[m - 1], js[m - 1] = k, J.j
    return ks, js


def forward(F: GridSamples, grid: GridId = GridId()) -> HaarCoefficientMap:
    """Full tensor Haar analysis of sampled data.

    The window must itself be a grid rectangle and n a power of two.  The
    returned map holds every <F, h_I ⊗ h_J> with I, J inside the window; the
    remainder (functions of one variable) is kept in `kernel`.
    """
    n = F.n
    if n & (n - 1):
        raise ValueError("sample count must be a power of two")
    Ix = _window_interval(F.x0, F.side, grid.sx)
    Iy = _window_interval(F.y0, F.side, grid.sy)
    C = _haar1d(_haar1d(F.values, 0), 1) * F.h
    kxs, jxs = _axis_index(Ix, n)
    kys, jys = _axis_index(Iy, n)
    kx = np.repeat(kxs, n - 1)
    jx = np.repeat(jxs, n - 1)
    ky = np.tile(kys, n - 1)
    jy = np.tile(jys, n - 1)
    vals = C[1:, 1:].ravel()
    K = C.copy()
    K[1:, 1:] = 0.0
    kernel = GridSamples(_ihaar1d(_ihaar1d(K / F.h, 0), 1), F.x0, F.y0, F.side)
    return HaarCoefficientMap(grid, kx, jx, ky, jy, vals, (F.x0, F.y0, F.side, n), kernel)


def inverse(cmap: HaarCoefficientMap, with_kernel: bool = True) -> GridSamples:
    """Synthesize samples from a map built on a sample window."""
    if cmap.layout is None:
        raise ValueError("coefficient map carries no sample layout")
    x0, y0, side, n = cmap.layout
    Ix = _window_interval(x0, side, cmap.grid.sx)
    Iy = _window_interval(y0, side, cmap.grid.sy)
    slot = {}
    for axis, I in ((0, Ix), (1, Iy)):
        ks, js = _axis_index(I, n)
        slot[axis] = {(int(k), int(j)): m + 1 for m, (k, j) in enumerate(zip(ks, js))}
    C = np.zeros((n, n))
    for i in range(len(cmap)):
        try:
            a = slot[0][(int(cmap.kx[i]), int(cmap.jx[i]))]
            b = slot[1][(int(cmap.ky[i]), int(cmap.jy[i]))]
        except KeyError as exc:
            raise ValueError("coefficient outside the sample window") from exc
        C[a, b] = cmap.values[i]
    h = side / n
    vals = _ihaar1d(_ihaar1d(C / h, 0), 1)
    if with_kernel and cmap.kernel is not None:
        vals = vals + cmap.kernel.values
    return GridSamples(vals, x0, y0, side)


def project_out_kernel(F: GridSamples, grid: GridId = GridId()) -> GridSamples:
    """Keep only the tensor-wavelet part sum <F, h_R> h_R."""
    return inverse(forward(F, grid), with_kernel=False)
