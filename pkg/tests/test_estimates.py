import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biparam.dyadic import DyadicInterval, DyadicRectangle, GridId
from biparam.estimates import (
    ConfigError,
    GammaReport,
    LambdaConfig,
    case_tag,
    choose_grid,
    count_segments,
    count_segments_bruteforce,
    counting_check,
    decay_slope,
    eccentricity_sum,
    enumerate_pairs,
    error_term_scan,
    gamma_bound,
    gamma_exact,
    gamma_from_table,
    lemma22_ratio,
    perfect_cancellation_pair,
    r1_min,
    random_config,
    reports_to_csv,
    table2_case,
    table_predicate_zero,
)
from biparam.geometry import Rect
from biparam.haar import GridSamples, PolyBump, SeparableExpr, Trig
from biparam.rotated_inner import inner_product
from biparam.transforms import compose_rotation, desk_family

UNIT = DyadicRectangle(DyadicInterval(0, 0), DyadicInterval(0, 0))


def config_for(seed):
    return random_config(np.random.default_rng(seed))


def test_grid_choice_covers_rotated_box():
    gc = choose_grid(UNIT, 0.4)
    assert gc.Q1 > 0 and gc.Q2 > 0
    assert gc.grid in GridId.all()


def test_random_configs_are_admissible():
    rng = np.random.default_rng(3)
    for _ in range(20):
        cfg = random_config(rng)
        cfg.check()
        assert cfg.r1 >= r1_min(cfg.K_max_i, cfg.theta, cfg.l)


def test_inadmissible_config_rejected():
    cfg = LambdaConfig(UNIT, 3, 0, 1, 0, 0.3, 5)
    with pytest.raises(ConfigError):
        cfg.check()


def test_axis_counts_are_column_counts():
    # theta = 0: the three vertical lines x = 0, 1/2, 1 of K meet one column of width 2 each
    nv, nh = count_segments(UNIT, 0.0, 1, -1, GridId())
    assert nv == count_segments_bruteforce(UNIT, 0.0, 1, -1, GridId(), Rect(-4, -4, 8, 8))[0]


@pytest.mark.parametrize("seed", range(6))
def test_fast_counts_match_bruteforce(seed):
    cfg = config_for(seed)
    gc = cfg.grid_choice()
    K = next(iter(enumerate_pairs(cfg).K))
    big = Rect(-8, -8, 16, 16)
    assert count_segments(K, cfg.theta, cfg.r1, cfg.r2, gc.grid) == count_segments_bruteforce(K, cfg.theta, cfg.r1, cfg.r2, gc.grid, big)


@pytest.mark.parametrize("seed", range(20))
def test_explicit_counting_bounds(seed):
    rng = np.random.default_rng(seed)
    c = counting_check(random_config(rng), rng)
    assert c.explicit_ok()
    assert c.sparse_ok()


def test_literal_counting_bound_counterexample():
    # three short parallel segments in three different rows exceed the +2 slack
    rng = np.random.default_rng(0)
    checks = [counting_check(random_config(rng), rng) for _ in range(40)]
    assert any(not c.literal_ok() for c in checks)
    assert all(c.explicit_ok() for c in checks)


@pytest.mark.parametrize("seed", range(20))
def test_perfect_cancellation(seed):
    R, K, theta = perfect_cancellation_pair(np.random.default_rng(seed))
    assert abs(inner_product(R, K, theta)) <= 1e-12


def test_table_zero_row():
    th = 0.3
    gc = choose_grid(UNIT, th)
    r1 = max(r1_min(UNIT, th, 5), math.ceil(math.log2(2 * gc.Q1)))
    r2 = math.ceil(math.log2(4 * (math.cos(th) + math.sin(th))))
    cfg = LambdaConfig(UNIT, r1, r2, -1, -1, th, 5)
    assert table_predicate_zero(cfg)
    assert case_tag(cfg) == "zero"
    assert gamma_exact(cfg).total <= 1e-30
    assert gamma_bound(cfg).bound == 0.0


@pytest.mark.parametrize("seed", range(4))
def test_shuffled_order_agrees(seed):
    cfg = config_for(seed)
    a = gamma_exact(cfg).total
    b = gamma_exact(cfg, shuffle_seed=seed + 100).total
    assert b == pytest.approx(a, rel=1e-10, abs=1e-300)


def test_gamma_split_sums():
    cfg = config_for(1)
    g = gamma_from_table(enumerate_pairs(cfg), cfg.p_prime)
    assert g.total == pytest.approx(g.gamma0 + g.gamma1)


def test_gamma_bound_covers_every_table_row():
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(80):
        rep = gamma_bound(random_config(rng))
        assert rep.ok, rep
        seen.add(rep.case_tag.split("/")[0])
    assert seen >= {"zero", "sparse", "even-low", "even-high"}


def test_reports_csv_is_versioned():
    rep = GammaReport(1.0, 2.0, "zero", (1, 2, 3, 4))
    text = reports_to_csv([rep], [{"seed": 7}])
    head, row = text.strip().split("\n")
    assert head.startswith("version,")
    assert row.startswith("1,zero,") and row.endswith(",7")


def test_table2_cases():
    assert table2_case(0, -1, 0, 0, 0.3) in {"I", "II", "III", "IV", "uncovered"}


def test_scan_rejects_zero_mu():
    with pytest.raises(ConfigError):
        error_term_scan(UNIT, 0.3, 5, 4.0, -0.2, 0.0)
    with pytest.raises(ConfigError):
        error_term_scan(UNIT, 0.0, 5, 4.0, -0.2, 0.2)
    with pytest.raises(ConfigError):
        error_term_scan(UNIT, 0.3, 5, 4.0, -0.2, 0.3)


def test_scan_small_level():
    res = error_term_scan(UNIT, math.pi / 4, 4, 4.0, -0.2, 0.2, s=1.5)
    assert res.all_dominated
    assert res.total_exact <= res.total_bound
    assert "uncovered" not in res.cases


def test_decay_in_level():
    slope, totals = decay_slope(UNIT, math.pi / 4, [4, 5, 6], 4.0, -0.2, 0.2, s=1.5)
    assert totals[0] > totals[-1]
    assert slope > 0


def test_eccentricity_sums_decay():
    F = compose_rotation(desk_family(4)["bump"], math.pi / 6)
    G = GridSamples.sample(F, 128, -1.0, -1.0, 2.0)
    K0 = Rect(-1, -1, 2, 2)
    zetas = [2.0**-j for j in range(0, 6)]
    sums = [eccentricity_sum(G, K0, z, -6) for z in zetas]
    assert all(a >= b for a, b in zip(sums, sums[1:]))
    # a single constant C with sum <= C zeta^{2 gamma} |K0| ||F||^2, gamma = 0.2
    C = max(s / (z**0.4 * K0.area * G.l2_norm() ** 2) for s, z in zip(sums, zetas))
    assert C < 10


@settings(max_examples=10, deadline=None)
@given(st.integers(-3, -1), st.integers(-3, -1))
def test_coefficient_size_bounded_by_sup_norm(k1, k2):
    F = SeparableExpr(PolyBump(0.0, 1.0, 2), Trig(3.0, 0.2))
    assert lemma22_ratio(F, k1, k2, Rect(-1, -1, 2, 2), sup_norm=1.0) <= 1.0
