import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from biparam.dyadic import DyadicInterval, DyadicRectangle, GridId, shift_of
from biparam.geometry import Rect
from biparam.haar import (
    Constant,
    GridSamples,
    HaarCoefficientMap,
    HaarFactor,
    Indicator,
    PolyBump,
    PowerTail,
    SeparableExpr,
    SmoothHaar,
    Trig,
    coeff,
    forward,
    haar_value,
    inverse,
    project_out_kernel,
)


def test_haar_signs():
    assert haar_value((0, 1), 0.25) == 1.0
    assert haar_value((0, 1), 0.75) == -1.0
    assert haar_value((0, 1), 1.0) == 0.0


def test_haar_amplitude():
    assert haar_value((0, 0.25), 0.1) == pytest.approx(2.0)


def test_coefficient_of_own_wavelet():
    R = Rect(0.5, -1.0, 0.25, 2.0)
    F = SeparableExpr(HaarFactor(R.x0, R.x1), HaarFactor(R.y0, R.y1))
    assert coeff(F, R) == pytest.approx(1.0, abs=1e-14)


def test_constant_has_no_coefficients():
    F = SeparableExpr(Constant(3.0), Constant(1.0))
    assert coeff(F, Rect(0.1, 0.2, 0.5, 0.25)) == pytest.approx(0.0, abs=1e-14)


def test_dyadic_rectangle_accepted():
    R = DyadicRectangle(DyadicInterval(-1, 1), DyadicInterval(0, 0))
    F = SeparableExpr(HaarFactor(0.5, 1.0), HaarFactor(0.0, 1.0))
    assert coeff(F, R) == pytest.approx(1.0)


FACTORS = [
    SmoothHaar(1.0, 2.0, 0.125),
    PowerTail(0.25),
    PolyBump(0.3, 1.5, 3),
    PolyBump(0.0, 1.0, 2, odd=True),
    Trig(3.0, 0.4),
    Indicator(-0.5, 1.0),
]


@pytest.mark.parametrize("f", FACTORS, ids=lambda f: type(f).__name__)
def test_antiderivative_matches_quadrature(f):
    for a, b in [(-2.0, -0.3), (-0.7, 0.9), (0.95, 3.0)]:
        exact = f.integral(a, b)
        pts = [t for t in f.breakpoints if a < t < b]
        num = integrate.quad(lambda x: float(f(x)), a, b, points=pts or None, limit=200)[0]
        assert float(exact) == pytest.approx(num, abs=1e-9)


@pytest.mark.parametrize("f", FACTORS, ids=lambda f: type(f).__name__)
def test_haar_coeffs_vectorized(f):
    lefts = np.array([-1.0, 0.0, 0.75])
    vec = f.haar_coeffs(lefts, 0.5)
    one = [f.haar_coeff((a, a + 0.5)) for a in lefts]
    assert np.allclose(vec, one, atol=1e-14)


def _random_samples(rng, n=64):
    return GridSamples(rng.standard_normal((n, n)), 0.0, 0.0, 1.0)


@pytest.mark.parametrize("seed", range(3))
def test_roundtrip(seed):
    G = _random_samples(np.random.default_rng(seed))
    back = inverse(forward(G))
    assert np.max(np.abs(back.values - G.values)) <= 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_parseval(seed):
    G = _random_samples(np.random.default_rng(seed))
    cmap = forward(G)
    total = G.l2_norm() ** 2
    parts = float(np.sum(cmap.values**2)) + cmap.kernel.l2_norm() ** 2
    assert abs(total - parts) / total <= 1e-10


def test_shifted_grid_roundtrip():
    g = GridId.all()[3]
    x0 = float(shift_of(0, g.sx))
    G = GridSamples(np.random.default_rng(9).standard_normal((32, 32)), x0, x0, 1.0)
    assert np.allclose(inverse(forward(G, g)).values, G.values, atol=1e-12)


def test_one_variable_field_has_no_tensor_part():
    rng = np.random.default_rng(1)
    col = rng.standard_normal(64)
    G = GridSamples(np.repeat(col[:, None], 64, axis=1))
    assert np.max(np.abs(forward(G).values)) <= 1e-12
    assert np.max(np.abs(project_out_kernel(G).values)) <= 1e-12


def test_mean_free_rows_and_columns_unchanged():
    rng = np.random.default_rng(2)
    v = rng.standard_normal((32, 32))
    v -= v.mean(axis=0, keepdims=True)
    v -= v.mean(axis=1, keepdims=True)
    G = GridSamples(v)
    assert np.allclose(project_out_kernel(G).values, v, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([8, 16, 32]))
def test_projection_is_idempotent(seed, n):
    G = _random_samples(np.random.default_rng(seed), n)
    P = project_out_kernel(G)
    assert np.allclose(project_out_kernel(P).values, P.values, atol=1e-11)


def test_sampled_coefficients_agree_with_exact():
    F = SeparableExpr(PolyBump(0.4, 0.3, 3), Trig(2 * math.pi, 0.1))
    G = GridSamples.sample(F, 256, 0.0, 0.0, 1.0)
    cmap = forward(G)
    for i in range(0, len(cmap), 997):
        r = cmap.rectangle(i).rect()
        assert cmap.values[i] == pytest.approx(coeff(F, r), abs=1e-10)


def test_coefficient_map_jsonl_roundtrip():
    cmap = forward(_random_samples(np.random.default_rng(4), 8))
    back = HaarCoefficientMap.from_jsonl(cmap.to_jsonl())
    assert np.array_equal(back.values, cmap.values)
    assert back.rectangle(5) == cmap.rectangle(5)
