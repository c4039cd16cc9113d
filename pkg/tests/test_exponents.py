from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radbilap.exponents import (
    DomainError,
    ExponentWindow,
    GrowthParams,
    HypothesisError,
    RegionSpec,
    SingularFormulaError,
    alpha_star,
    certify_pair,
    power_law_params,
    power_law_report,
    q_double_star,
    q_lower_star,
    q_star,
    region_case,
    region_contains,
    threshold_infinity_thm23,
    threshold_infinity_thm24,
    window_origin_thm22,
)


def test_power_law_a2_window_is_exact():
    w = power_law_report(5, Fr(2))
    assert w.kind == "interval"
    assert (w.lo, w.hi) == (Fr(3), Fr(8))
    assert isinstance(w.lo, Fr) and isinstance(w.hi, Fr)


@pytest.mark.parametrize("N", range(5, 10))
def test_power_law_a4_thresholds_meet(N):
    w = power_law_report(N, Fr(4))
    split = Fr(2 * (N - 3), N - 4)
    assert w.kind == "split_pair"
    assert w.q2_threshold == split
    assert w.q1_window == (1, split)
    assert w.contains_pair(Fr(3, 2), split + Fr(1, 100))
    assert not w.contains_pair(split, split + 1)
    assert not w.contains(split)


def test_power_law_a0_window():
    # V = K = 1: q_** = 8/3 at infinity, q* = 12 at the origin
    w = power_law_report(5, 0)
    assert (w.lo, w.hi) == (pytest.approx(8 / 3), 12)
    assert w.contains(4)


def test_power_law_rejects_a_above_4():
    with pytest.raises(HypothesisError):
        power_law_report(5, 5)


def test_hand_computed_exponents():
    # alpha = -1, beta = 0, gamma = 2 in N = 5
    assert q_star(5, Fr(-1), Fr(0)) == 8
    assert q_lower_star(5, Fr(-1), Fr(0), Fr(2)) == Fr(8, 3)
    assert q_double_star(5, Fr(-1), Fr(0), Fr(2)) == 3
    thr = threshold_infinity_thm24(5, GrowthParams(Fr(-1), Fr(0), Fr(2)))
    assert (thr.value, thr.term) == (3, "q_double_star")


def test_alpha_star_branches_cross_at_half():
    for N in range(5, 12):
        b = Fr(1, 2)
        assert 4 * b - 2 - Fr(N, 2) == -(1 - b) * N == alpha_star(N, b)
    assert alpha_star(5, 0) == -4.5
    assert alpha_star(5, 1) == 0


def test_domain_errors():
    with pytest.raises(DomainError):
        alpha_star(4, 0)
    with pytest.raises(DomainError):
        alpha_star(5, 1.5)
    with pytest.raises(DomainError):
        GrowthParams(0, -0.1)
    with pytest.raises(DomainError):
        GrowthParams(0, 0, float("inf"))


def test_singular_formulas():
    with pytest.raises(SingularFormulaError):
        q_lower_star(6, 0, 0, 6)
    with pytest.raises(SingularFormulaError):
        q_double_star(6, 0, 0, 8)
    assert issubclass(SingularFormulaError, DomainError)


def test_origin_window_empty_at_alpha_star():
    N, beta = 5, Fr(1, 4)
    w = window_origin_thm22(N, GrowthParams(alpha_star(N, beta), beta))
    assert w.is_empty and "alpha" in w.reason
    assert not w.contains(2)


def test_thresholds_at_infinity():
    p = GrowthParams(Fr(1), Fr(0), Fr(0))
    assert threshold_infinity_thm24(5, p).value == Fr(8, 3)
    assert threshold_infinity_thm23(5, p).value == 12
    with pytest.raises(HypothesisError):
        threshold_infinity_thm24(5, GrowthParams(0, 0))
    with pytest.raises(HypothesisError):
        threshold_infinity_thm24(5, GrowthParams(0, 0, 5))


def test_threshold_ties_report_first_term():
    # beta = 1/2 makes 2beta = 1
    thr = threshold_infinity_thm23(5, GrowthParams(Fr(-100), Fr(1, 2)))
    assert thr.value == 1 and thr.term == "1"


def test_region_cases():
    N = 7
    assert region_case(N, 4) == "4<=g<N"
    assert region_case(N, 7) == "g=N"
    assert region_case(N, 8) == "N<g<2N-4"
    assert region_case(N, 10) == "g=2N-4"
    assert region_case(N, 11) == "g>2N-4"
    with pytest.raises(HypothesisError):
        region_case(N, 3.9)
    with pytest.raises(ValueError):
        region_contains(N, RegionSpec(0, 8, "g=N"), 0, 3)


def test_region_beyond_2n_minus_4_is_half_line():
    N, g = 5, Fr(8)
    reg = RegionSpec.for_dimension(N, Fr(0), g)
    lo = max(1, q_lower_star(N, Fr(0), 0, g), q_double_star(N, Fr(0), 0, g))
    assert not region_contains(N, reg, Fr(0), lo)
    assert region_contains(N, reg, Fr(0), lo + Fr(1, 10**6))
    assert region_contains(N, reg, Fr(0), 10**6)


@settings(max_examples=300, deadline=None)
@given(
    N=st.integers(5, 9),
    beta=st.fractions(0, 1),
    alpha=st.fractions(-20, 20),
    q=st.fractions(1, 30),
)
def test_region_at_gamma_4_matches_origin_window(N, beta, alpha, q):
    reg = RegionSpec.for_dimension(N, beta, 4)
    w = window_origin_thm22(N, GrowthParams(alpha, beta))
    assert region_contains(N, reg, alpha, q) == w.contains(q)


@given(N=st.integers(5, 12), beta=st.fractions(0, 1), a1=st.fractions(-10, 10), a2=st.fractions(-10, 10))
def test_q_star_increasing_in_alpha(N, beta, a1, a2):
    if a1 < a2:
        assert q_star(N, a1, beta) < q_star(N, a2, beta)


@given(a=st.fractions(0, 4))
def test_power_law_parameters(a):
    o, i = power_law_params(a)
    assert o.alpha == i.alpha == 1 - a
    assert o.gamma == i.gamma == a


def test_certify_pair_picks_theorems():
    o, i = power_law_params(2)
    c = certify_pair(5, o, i, 4, 4)
    assert c.certified and (c.origin_thm, c.infinity_thm) == ("2.2", "2.4")
    c = certify_pair(5, o, i, 1.5, 1.5)
    assert not c.certified and "q_double_star" in c.failing
    c = certify_pair(5, o, i, 9, 9)
    assert not c.certified and "q1=9" in c.failing
    # gamma > 4 moves the origin to the region test and infinity to the other threshold
    o6, i6 = power_law_params(6)
    c = certify_pair(5, o6, i6, 3, 100)
    assert (c.origin_thm, c.infinity_thm) == ("2.5", "2.3")


def test_window_validation():
    with pytest.raises(ValueError):
        ExponentWindow("interval", lo=3, hi=3)
    with pytest.raises(ValueError):
        ExponentWindow("bogus")
    assert ExponentWindow("half_line", lo=2).contains(2.5)
    assert not ExponentWindow("empty").contains_pair(2, 3)
