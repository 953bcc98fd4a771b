import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.ndimage import map_coordinates

from biparam.geometry import Rect
from biparam.haar import GridSamples, Indicator, PolyBump, SeparableExpr, coeff
from biparam.transforms import (
    RotatedField,
    WindowError,
    compose_rotation,
    counterexample1,
    counterexample2_row,
    directional_hilbert,
    interpolation_sweep,
    kernel_l1,
    quadrature_value,
    rotated_tail_value,
    rough_operator,
    smooth_haar_constants,
    strip_field,
    tail_bmo,
)


def grid(n, side):
    xs = -side / 2 + side / n * (np.arange(n) + 0.5)
    return np.meshgrid(xs, xs, indexing="ij")


def bump_samples(n=256, side=16.0):
    X, Y = grid(n, side)
    return GridSamples(np.exp(-(X**2 + 2 * Y**2) / 4) * X / 2, -side / 2, -side / 2, side), X, Y


def test_rotation_by_zero_is_identity():
    G, _, _ = bump_samples(64, 8.0)
    assert compose_rotation(G, 0.0) is G
    F = SeparableExpr(PolyBump(), PolyBump())
    assert compose_rotation(F, 0.0) is F


def test_resampling_preserves_l2():
    G, _, _ = bump_samples(256, 16.0)
    R = compose_rotation(G, 0.7)
    assert R.l2_norm() == pytest.approx(G.l2_norm(), rel=1e-3)


def test_resampling_window_checked():
    G, _, _ = bump_samples(32, 4.0)
    with pytest.raises(WindowError):
        compose_rotation(G, 0.7, Rect(-2, -2, 4, 4))


def test_indicator_rotates_exactly():
    F = SeparableExpr(Indicator(0.0, 1.0), Indicator(0.0, 2.0))
    R = compose_rotation(F, 0.4)
    assert R.rect_integral(-5, 5, -5, 5) == pytest.approx(2.0, rel=1e-12)


def test_closed_form_rotation_preserves_integrals():
    F = SeparableExpr(PolyBump(0.0, 1.0, 3), PolyBump(0.0, 0.5, 2))
    R = compose_rotation(F, 0.9)
    assert isinstance(R, RotatedField)
    assert R.rect_integral(-2, 2, -2, 2) == pytest.approx(F.rect_integral(-2, 2, -2, 2), rel=1e-7)
    assert compose_rotation(R, -0.9).theta == pytest.approx(0.0)


def test_hilbert_of_plane_wave():
    n, side = 64, 1.0
    xs = side * np.arange(n) / n
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    k = 2 * math.pi * np.array([3.0, -2.0])
    G = GridSamples(np.cos(k[0] * X + k[1] * Y), 0.0, 0.0, side)
    H = directional_hilbert(G, (1.0, 0.2))
    # cos -> sin under -i sgn(v . xi) when v . xi0 > 0
    assert np.allclose(H.values, np.sin(k[0] * X + k[1] * Y), atol=1e-12)


def test_hilbert_kills_constants():
    G = GridSamples(np.full((32, 32), 2.5))
    assert np.max(np.abs(directional_hilbert(G, (0.3, 0.8)).values)) <= 1e-14


def test_hilbert_squares_to_minus_identity():
    rng = np.random.default_rng(0)
    n = 64
    spec = np.zeros((n, n), dtype=complex)
    for _ in range(20):
        a, b = (int(v) for v in rng.integers(-20, 21, size=2))
        if a == 0:
            a = 1
        spec[a % n, b % n] += rng.standard_normal()
    G = GridSamples(np.fft.ifft2(spec).real * n, 0.0, 0.0, 1.0)
    HH = directional_hilbert(directional_hilbert(G, (1, 0)), (1, 0))
    assert np.max(np.abs(HH.values + G.values)) <= 1e-8


def test_hilbert_axis_direction_exact_under_quarter_turn():
    G, X, Y = bump_samples(128, 16.0)
    H = directional_hilbert(G, (math.cos(math.pi / 2), math.sin(math.pi / 2)))
    A = compose_rotation(G, math.pi / 2)
    HA = directional_hilbert(A, (1, 0))
    back = map_coordinates(HA.values, [(-Y - HA.x0) / HA.h - 0.5, (X - HA.y0) / HA.h - 0.5], order=1)
    assert np.max(np.abs(H.values - back)) <= 1e-12


def test_hilbert_commutes_with_rotation():
    th = 0.6
    c, s = math.cos(th), math.sin(th)
    G, X, Y = bump_samples(512, 32.0)
    H = directional_hilbert(G, (c, s), pad=4)
    HA = directional_hilbert(compose_rotation(G, th), (1, 0), pad=4)
    B = map_coordinates(HA.values, [(c * X + s * Y - HA.x0) / HA.h - 0.5, (-s * X + c * Y - HA.y0) / HA.h - 0.5], order=3)
    m = (np.abs(X) < 3) & (np.abs(Y) < 3)
    assert np.max(np.abs(H.values - B)[m]) <= 1e-3


def test_rough_operator_zero_kernel_and_constants():
    G, _, _ = bump_samples(64, 8.0)
    zero = rough_operator(G, lambda a: 0.0, n_theta=32)
    assert np.max(np.abs(zero.values)) == 0.0
    C = GridSamples(np.ones((32, 32)))
    out = rough_operator(C, lambda a: math.cos(3 * a), n_theta=64)
    assert np.max(np.abs(out.values)) <= 1e-10


def test_rough_operator_rejects_mean():
    with pytest.raises(ValueError):
        rough_operator(GridSamples(np.ones((8, 8))), lambda a: 1.0, n_theta=16)


def test_point_mass_pair_recovers_hilbert():
    n, nt = 64, 64
    xs = np.arange(n) / n
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    G = GridSamples(np.cos(2 * math.pi * (3 * X + Y)), 0.0, 0.0, 1.0)
    vals = np.zeros(nt)
    vals[0], vals[nt // 2] = 1.0, -1.0
    T = rough_operator(G, vals, n_theta=nt)
    c = 2 * math.pi / nt  # weight of the pair: 1/2 (dv H_v - dv H_{-v})
    assert np.allclose(T.values, c * directional_hilbert(G, (1, 0)).values, atol=1e-12)
    assert kernel_l1(vals, nt) == pytest.approx(2 * c)


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 4, math.pi / 3, 2.0, 4.0])
def test_strip_witness(theta):
    w = counterexample1(theta)
    assert w.passed
    F = strip_field(theta)
    assert abs(coeff(F, w.R.rect())) / math.sqrt(w.R.rect().area) == pytest.approx(w.value, rel=1e-9)


def test_strip_witness_quadrature():
    w = counterexample1(math.pi / 6)
    assert quadrature_value(strip_field(math.pi / 6), w.R, n=1024) == pytest.approx(w.value, abs=1e-3)


@pytest.mark.parametrize("theta", [0.0, math.pi / 2, math.pi, 3 * math.pi / 2])
def test_strip_rejects_axis_angles(theta):
    with pytest.raises(ValueError):
        counterexample1(theta)


def test_tail_row_lemmas():
    row = counterexample2_row(4.0)
    Q, Qp = smooth_haar_constants()
    assert row.c1 == pytest.approx(8 * (Q + Qp))
    assert row.w1p <= row.c1
    assert row.lower >= 1 / 32
    with pytest.raises(ValueError):
        counterexample2_row(2.0)


def test_tail_identity_angle_has_no_lower_bound():
    # without rotation the test rectangle sees a product with a mean-zero factor
    assert rotated_tail_value(4.0, 0.0) <= tail_bmo(4.0)


def test_sweep_terms_monotone_in_epsilon():
    fam = {"bump": SeparableExpr(PolyBump(0.0, 1.0, 3), PolyBump(0.0, 1.0, 3))}
    eps = [2.0**-k for k in range(2, 6)]
    rows = interpolation_sweep([math.pi / 4], eps, family=fam, n=128)
    tb = [r.term_bmo for r in rows]
    ts = [r.term_sobolev for r in rows]
    assert all(a < b for a, b in zip(tb, tb[1:]))
    assert all(a > b for a, b in zip(ts, ts[1:]))
    assert all(math.isfinite(r.c_min) and r.c_min > 0 for r in rows)
    assert rows[0].row()["version"] == 1


def test_sweep_trivial_regime():
    fam = {"bump": SeparableExpr(PolyBump(0.0, 1.0, 3), PolyBump(0.0, 1.0, 3))}
    (row,) = interpolation_sweep([math.pi / 6], [0.9], family=fam, n=128)
    # near eps = 1 the Sobolev term alone already dominates the left side
    assert row.lhs <= row.term_sobolev


def test_sweep_rejects_bad_parameters():
    with pytest.raises(ValueError):
        interpolation_sweep([0.3], [1.5])
    with pytest.raises(ValueError):
        interpolation_sweep([0.3], [0.5], p=2.0, s=1.0)
    with pytest.raises(ValueError):
        interpolation_sweep([0.3], [0.5], gamma=0.5)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, math.pi / 2 - 0.05))
def test_strip_witness_any_first_quadrant_angle(theta):
    assert counterexample1(theta).value >= 1 / 16
