import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gauss_conjunction.bounds import (bound_for, corollary1_bound, correlated_bound, ec_heuristic, gap_scale,
                                      normalized_gap, pickands_constant, theorem1_bound, toeplitz_factor)
from gauss_conjunction.kernels import ProcessSet, QuadraticWarp, SquaredExponential, TimeWarpedSE
from gauss_conjunction.scalar_stats import SQRT_2PI, orthant_prob, phi, phi_bar

# 40-digit evaluations of the closed forms at u = 2
PHI_BAR_2 = 0.0227501319481792072
RICE_MEAN_2 = 0.021539279301848629786  # phi(2) / sqrt(2 pi)
ONE_PROCESS_BOUND_2 = 0.044289411250027836986
PAIR_POINT_2 = 0.00051756850365956424961
PAIR_CROSSING_2 = 0.00098004289237148328378
PAIR_TOTAL_2 = 0.0014976113960310475334
CORRELATED_CROSSING_2_HALF = 0.0053463308347357800411
ORTHANT_2_HALF = 0.0040529462351629796945


def test_single_process_bound_value():
    rep = theorem1_bound([1.0], 1.0, 2.0)
    assert rep.point_term == pytest.approx(PHI_BAR_2, rel=1e-14)
    assert rep.crossing_term == pytest.approx(RICE_MEAN_2, rel=1e-14)
    assert abs(rep.total - ONE_PROCESS_BOUND_2) < 1e-6
    assert rep.total == pytest.approx(ONE_PROCESS_BOUND_2, rel=1e-14)
    assert rep.method == "theorem1"


def test_zero_horizon_leaves_point_term():
    for u in (0.5, 2.0):
        rep = theorem1_bound([1.0, 1.0], 0.0, u)
        assert rep.total == phi_bar(u) ** 2 and rep.crossing_term == 0.0


def test_time_warp_scales_crossing_term():
    k = TimeWarpedSE(1.0, QuadraticWarp(0.5))
    speed = [lambda t: math.sqrt(k.deriv_variance(t))]
    warped = theorem1_bound(speed, 1.0, 2.0)
    plain = theorem1_bound([1.0], 1.0, 2.0)
    assert warped.crossing_term == pytest.approx(1.5 * plain.crossing_term, rel=1e-12)
    via_ps = bound_for(ProcessSet.independent([k], 1.0), 2.0)
    assert via_ps.total == pytest.approx(warped.total, rel=1e-12)


@pytest.mark.parametrize("u", [0.0, -1.0, math.nan])
def test_nonpositive_level_rejected(u):
    with pytest.raises(ValueError):
        theorem1_bound([1.0], 1.0, u)
    with pytest.raises(ValueError):
        corollary1_bound([1.0], 1.0, u)


def test_constant_speed_bound_examples():
    assert corollary1_bound([1.0], 1.0, 2.0).total == theorem1_bound([1.0], 1.0, 2.0).total
    rep = corollary1_bound([1.0, 4.0], 1.0, 2.0)
    assert rep.crossing_term / (phi_bar(2.0) * phi(2.0) / SQRT_2PI) == pytest.approx(3.0, rel=1e-14)


def test_independent_pair_bound_value():
    rep = corollary1_bound([1.0, 1.0], 1.0, 2.0)
    assert rep.point_term == pytest.approx(PAIR_POINT_2, rel=1e-13)
    assert rep.crossing_term == pytest.approx(PAIR_CROSSING_2, rel=1e-13)
    assert rep.total == pytest.approx(PAIR_TOTAL_2, rel=1e-13)


def test_constant_speed_form_matches_general_form():
    C = [0.3, 1.0, 2.5]
    a = corollary1_bound(C, 1.7, 1.2).total
    b = theorem1_bound([math.sqrt(c) for c in C], 1.7, 1.2).total
    assert a == pytest.approx(b, rel=1e-15)


@pytest.mark.parametrize("C", [[], [0.0], [-1.0, 1.0]])
def test_bound_rejects_bad_coefficients(C):
    with pytest.raises(ValueError):
        corollary1_bound(C, 1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.1, 10), min_size=1, max_size=5), st.floats(0.1, 5), st.floats(0.5, 6))
def test_report_invariants(C, T, u):
    rep = corollary1_bound(C, T, u)
    assert rep.total == rep.point_term + rep.crossing_term
    assert rep.total >= 0 and 0 < rep.point_term < 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.1, 10), min_size=1, max_size=4), st.floats(0.1, 5), st.floats(0.5, 6),
       st.floats(0.01, 1.0))
def test_bound_monotonicity(C, T, u, d):
    s = [math.sqrt(c) for c in C]
    base = theorem1_bound(s, T, u).total
    assert theorem1_bound(s, T, u + d).total < base
    assert theorem1_bound(s, T + d, u).total > base
    faster = list(s)
    faster[0] += d
    assert theorem1_bound(faster, T, u).total > base


def test_crossing_to_point_ratio_grows_with_level():
    ratio = lambda u: corollary1_bound([1.0, 1.0], 1.0, u).crossing_term / corollary1_bound(  # noqa: E731
        [1.0, 1.0], 1.0, u).point_term
    assert ratio(6.0) > ratio(3.0)
    # Mills ratio asymptotics: ratio ~ sum(s) T u / sqrt(2 pi)
    assert ratio(6.0) / (2 * 6.0 / SQRT_2PI) == pytest.approx(1.0, rel=0.05)


# ------------------------------------------------------------------ EC heuristic

def test_ec_single_process_expansion():
    rep = ec_heuristic([1.0], 1.0, 2.0)
    assert rep.total == pytest.approx(phi_bar(2.0) + phi(2.0) / SQRT_2PI, rel=1e-14)


def test_ec_zero_horizon():
    assert ec_heuristic([1.0, 2.0, 3.0], 0.0, 1.5).total == pytest.approx(phi_bar(1.5) ** 3, rel=1e-15)


def test_toeplitz_factor_shape():
    r = toeplitz_factor(4.0, 1.0)
    assert r[1, 0] == 0.0 and r[0, 0] == r[1, 1] == phi_bar(1.0)
    assert r[0, 1] == pytest.approx(2.0 * phi(1.0) / math.sqrt(2.0), rel=1e-15)


def test_ec_matches_bound_on_random_tuples():
    rng = np.random.default_rng(20240601)
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        C = rng.uniform(0.1, 10, n).tolist()
        T, u = rng.uniform(0.1, 5), rng.uniform(0.5, 6)
        a, b = ec_heuristic(C, T, u).total, corollary1_bound(C, T, u).total
        assert abs(a - b) <= 1e-12 * abs(b)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.1, 10), min_size=2, max_size=5), st.floats(0.1, 5), st.floats(0.5, 6))
def test_ec_product_order_invariance(C, T, u):
    ref = ec_heuristic(C, T, u).total
    for perm in itertools.islice(itertools.permutations(range(len(C))), 24):
        assert abs(ec_heuristic(C, T, u, order=perm).total - ref) <= 1e-14 * ref


# ------------------------------------------------------------------ Pickands closed form

def test_pickands_constant_values():
    assert pickands_constant([1.0]) == pytest.approx(0.3989422804, abs=1e-10)
    assert pickands_constant([1.0, 1.0]) == pytest.approx(0.7978845608, abs=1e-10)
    assert pickands_constant([4.0]) == pytest.approx(2 / SQRT_2PI, rel=1e-15)


# ------------------------------------------------------------------ correlated pair

@pytest.mark.parametrize("u", [0.5, 1.0, 2.0, 3.5])
def test_correlated_reduces_to_independent_pair(u):
    a = correlated_bound(u, 0.0, 1.0, 1.0).total
    b = theorem1_bound([1.0, 1.0], 1.0, u).total
    assert abs(a - b) <= 1e-12


@pytest.mark.parametrize("u", [1.0, 2.0, 2.5])
def test_correlated_perfect_correlation_limit(u):
    a = correlated_bound(u, 1 - 1e-9, 1.0, 1.0).total
    assert abs(a - theorem1_bound([1.0], 1.0, u).total) < 1e-5


def test_correlated_composed_value():
    rep = correlated_bound(2.0, 0.5, 1.0, 1.0)
    assert rep.point_term == pytest.approx(orthant_prob(2.0, 0.5), rel=1e-15)
    assert rep.point_term == pytest.approx(ORTHANT_2_HALF, rel=1e-9)
    assert rep.crossing_term == pytest.approx(2 * phi(2.0) * phi_bar(2 / math.sqrt(3)) / SQRT_2PI, rel=1e-14)
    assert rep.crossing_term == pytest.approx(CORRELATED_CROSSING_2_HALF, rel=1e-13)


@pytest.mark.parametrize("rho", [-1.0, 1.0])
def test_correlated_rejects_degenerate(rho):
    with pytest.raises(ValueError):
        correlated_bound(2.0, rho, 1.0, 1.0)


def test_correlated_bound_increases_with_correlation():
    rhos = np.linspace(-0.9, 0.99, 40)
    for u in (1.0, 2.0, 3.0):
        totals = [correlated_bound(u, r, 1.0, 1.0).total for r in rhos]
        assert np.all(np.diff(totals) >= 0)


def test_bound_for_correlated_pair():
    ps = ProcessSet.correlated_pair(SquaredExponential(0.5), 0.3, 2.0)
    assert bound_for(ps, 1.5).total == correlated_bound(1.5, 0.3, 2.0, 2.0).total


def test_normalized_gap():
    assert gap_scale(2, 2.0) == pytest.approx(PHI_BAR_2 * phi(2.0), rel=1e-15)
    assert normalized_gap(PAIR_TOTAL_2, PAIR_TOTAL_2, 2, 2.0) == 0.0
    assert normalized_gap(1e-3, 0.0, 1, 2.0) == pytest.approx(1e-3 / phi(2.0), rel=1e-15)
