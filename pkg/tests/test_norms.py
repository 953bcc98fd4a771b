import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biparam.dyadic import GridId
from biparam.geometry import Rect
from biparam.haar import (
    Constant,
    GridSamples,
    HaarFactor,
    PolyBump,
    PowerTail,
    SeparableExpr,
    SmoothHaar,
)
from biparam.norms import (
    BmoEstimate,
    OpenSet,
    bmo_1d,
    bmo_biparam,
    carleson_sum,
    coefficient_table,
    lp_grid,
    osc,
    separable_w1p,
    sobolev_norm,
    structured_family,
)
from biparam.transforms import counterexample1, smooth_haar_constants, strip_field, tail_field


def test_osc_of_constant():
    assert osc(Constant(2.0), (0.0, 3.0)) == pytest.approx(0.0, abs=1e-12)


def test_osc_of_haar_function():
    assert osc(HaarFactor(0.0, 1.0), (0.0, 1.0)) == pytest.approx(1.0)


def test_tail_oscillation_near_one():
    a = 2.0**-6
    g = PowerTail(a)
    worst = max(osc(g, (1.0, 1.0 + j)) for j in np.linspace(0.01, a**-0.5, 20))
    assert worst <= 4 * math.sqrt(a)


def test_bmo_1d_constants_and_single_interval():
    assert bmo_1d(Constant(1.0), [(0, 1), (-3, 5)]).value == pytest.approx(0.0, abs=1e-12)
    f = SmoothHaar()
    assert bmo_1d(f, [(0.5, 2.5)]).value == pytest.approx(osc(f, (0.5, 2.5)))
    with pytest.raises(ValueError):
        bmo_1d(f, [])


def test_tail_bmo_small():
    a = 2.0**-6
    assert bmo_1d(PowerTail(a), structured_family()).value <= a**0.25


def test_carleson_sum_of_single_wavelet():
    R0 = Rect(0.0, 0.0, 0.5, 0.25)
    F = SeparableExpr(HaarFactor(R0.x0, R0.x1), HaarFactor(R0.y0, R0.y1))
    cmap = coefficient_table(F, R0, GridId(), -5, -1, -5, -2)
    assert carleson_sum(cmap, R0) == pytest.approx(R0.area**-0.5)


@pytest.mark.parametrize("seed", range(3))
def test_carleson_sum_bessel(seed):
    rng = np.random.default_rng(seed)
    G = GridSamples(rng.standard_normal((32, 32)), 0.0, 0.0, 1.0)
    cmap = coefficient_table(G, G.window(), GridId(), -5, 0)
    big = Rect(-1.0, -1.0, 3.0, 3.0)
    assert carleson_sum(cmap, big) <= G.l2_norm() / math.sqrt(big.area) + 1e-12


def test_one_variable_field_has_zero_bmo():
    F = SeparableExpr(PolyBump(0.0, 1.0, 3), Constant(1.0))
    for strategy in ("single", "greedy"):
        assert bmo_biparam(F, Rect(-1, -1, 2, 2), -4, 0, strategy=strategy).value == pytest.approx(0.0, abs=1e-12)


def test_rotated_strip_bmo_lower_bound():
    w = counterexample1(math.pi / 4)
    R = w.R.rect()
    est = bmo_biparam(strip_field(math.pi / 4), Rect(R.x0 - R.w, R.y0 - R.h, 4 * R.w, 4 * R.h), -9, -8)
    assert est.value >= 1 / 16


def test_estimate_json_roundtrip():
    S = OpenSet(np.eye(4, dtype=bool), 0.0, 0.0, 0.25)
    for w in (S, Rect(0, 0, 1, 2), (0.0, 1.5), None):
        e = BmoEstimate(0.5, w, "x", "0,0", {"k": 1})
        back = BmoEstimate.from_json(e.to_json())
        assert back.value == 0.5 and back.meta == {"k": 1}
    assert np.array_equal(BmoEstimate.from_json(BmoEstimate(1.0, S, "x").to_json()).witness.mask, S.mask)


def test_openset_basics():
    S = OpenSet.from_rects([Rect(0, 0, 0.5, 1), Rect(0.5, 0, 0.25, 0.25)], Rect(0, 0, 1, 1), 0.125)
    assert S.measure() == pytest.approx(0.5 + 1 / 16)
    assert S.contains(Rect(0.1, 0.1, 0.3, 0.8))
    assert not S.contains(Rect(0.4, 0.4, 0.3, 0.3))
    assert OpenSet.from_pbm(S.to_pbm()).mask.tolist() == S.mask.tolist()


def test_sobolev_of_zero():
    assert sobolev_norm(GridSamples(np.zeros((32, 32))), 1.0, 4.0) == 0.0


def test_sobolev_order_zero_is_lp():
    rng = np.random.default_rng(0)
    G = GridSamples(rng.standard_normal((64, 64)), 0.0, 0.0, 2.0)
    direct = (np.sum(np.abs(G.values) ** 3) * G.h**2) ** (1 / 3)
    assert sobolev_norm(G, 0.0, 3.0) == pytest.approx(direct, rel=1e-8)
    assert lp_grid(G.values, G.h, 3.0) == pytest.approx(direct, rel=1e-12)


def test_sobolev_rejects_bad_orders():
    G = GridSamples(np.zeros((8, 8)))
    with pytest.raises(ValueError):
        sobolev_norm(G, 1.5, 4.0)
    with pytest.raises(ValueError):
        sobolev_norm(G, 0.5, 1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(0.05, 0.1))
def test_sobolev_monotone_in_order(s, ds):
    F = SeparableExpr(PolyBump(0.0, 1.0, 3), PolyBump(0.0, 1.0, 3))
    G = GridSamples.sample(F, 64, -2.0, -2.0, 4.0)
    assert sobolev_norm(G, s, 4.0) <= sobolev_norm(G, s + ds, 4.0) * (1 + 1e-12)


def test_tail_family_w1p_bounded():
    Q, Qp = smooth_haar_constants()
    for p in (4, 8, 16, 32):
        F = tail_field(p)
        assert separable_w1p(F.f, F.g, p)["w1p"] <= 8 * (Q + Qp)
