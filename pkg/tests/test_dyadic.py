from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from biparam.dyadic import (
    DyadicInterval,
    DyadicRectangle,
    GridId,
    check_delta,
    cover_interval,
    enumerate_rectangles,
    iter_subrectangles,
    locate,
    shift_of,
)
from biparam.geometry import Rect

THIRD = Fraction(1, 3)


def test_shift_small_scales():
    assert shift_of(-3, THIRD) == THIRD
    assert shift_of(0, THIRD) == THIRD


def test_shift_even_and_odd():
    assert shift_of(2, THIRD) == Fraction(4, 3)
    assert shift_of(1, THIRD) == Fraction(4, 3)
    assert shift_of(3, THIRD) == THIRD + 5


def test_delta_range_checked():
    with pytest.raises(ValueError):
        check_delta(Fraction(1, 2))
    with pytest.raises(ValueError):
        GridId(Fraction(0), Fraction(3, 4))


def test_children_of_unit_interval():
    left, right = DyadicInterval(0, 0).children()
    assert left.realize() == (0, Fraction(1, 2))
    assert right.realize() == (Fraction(1, 2), 1)


def test_shifted_children_stay_in_grid():
    I = DyadicInterval(2, 1, THIRD)
    for c in I.children():
        assert c.k == 1 and c.shift == THIRD
        assert I.contains(c)
    a, b = I.realize()
    assert I.children()[0].realize()[0] == a and I.children()[1].realize()[1] == b


@given(st.integers(-12, 12), st.integers(-50, 50), st.sampled_from([Fraction(0), THIRD, Fraction(1, 5)]))
def test_nesting(k, j, shift):
    I = DyadicInterval(k, j, shift)
    left, right = I.children()
    assert left.length == right.length == I.length / 2
    assert left.parent() == I and right.parent() == I
    assert I.parent().contains(I)


@given(st.fractions(-100, 100), st.integers(-8, 8), st.sampled_from([Fraction(0), THIRD]))
def test_locate_contains_point(x, k, shift):
    assert locate(x, k, shift).contains_point(x)


def test_cover_oracle():
    cov = cover_interval(Fraction(1, 10), Fraction(2, 5))
    a, b = cov.interval.realize()
    assert a <= Fraction(1, 10) and Fraction(2, 5) <= b
    assert cov.interval.length <= Fraction(6, 5)


def test_cover_of_dyadic_interval_is_tight():
    cov = cover_interval(Fraction(1, 4), Fraction(1, 2))
    assert cov.c == pytest.approx(1.0)


@given(st.fractions(-20, 20), st.fractions(Fraction(1, 1000), 20))
def test_cover_constant_bounded(a, L):
    cov = cover_interval(a, a + L)
    lo, hi = cov.interval.realize()
    assert lo <= a and a + L <= hi
    assert cov.c <= 7.0


def test_four_half_squares():
    rects = enumerate_rectangles(Rect(0, 0, 1, 1), GridId(), -1, -1)
    assert len(rects) == 4
    assert sum(r.area for r in rects) == 1


def test_subrectangles_tile_parent():
    K = DyadicRectangle(DyadicInterval(1, 0, THIRD), DyadicInterval(0, 2, THIRD))
    subs = list(iter_subrectangles(K, -1, -2))
    assert len(subs) == 4 * 4
    assert sum(s.area for s in subs) == K.area
    assert all(K.contains(s) for s in subs)


def test_grid_labels_roundtrip():
    for g in GridId.all():
        assert GridId.from_label(g.label) == g
