import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from faultca import analysis as an
from oracles import binary_entropy, binomial_tail_bruteforce


# -- binomial tail -------------------------------------------------------------

def test_tail_examples():
    assert an.binomial_tail(3, 2, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert an.binomial_tail(7, 0, 0.3) == 1.0
    assert an.binomial_tail(7, 3, 0.0) == 0.0
    assert an.binomial_tail(7, 8, 0.9) == 0.0


def test_tail_rejects_bad_input():
    with pytest.raises(an.AnalysisError):
        an.binomial_tail(3, 5, 0.5)
    with pytest.raises(an.AnalysisError):
        an.binomial_tail(3, 2, 1.5)


def test_tail_brute_force():
    for d in range(0, 13):
        for h in range(0, d + 1):
            for p in (0.1, 0.3, 0.5):
                assert abs(an.binomial_tail(d, h, p) - binomial_tail_bruteforce(d, h, p)) < 1e-12


@pytest.mark.parametrize("d,h,p", [(5001, 400, 0.1), (5001, 501, 0.1), (5001, 2501, 0.1), (2000, 1100, 0.5),
                                   (301, 151, 0.4999)])
def test_tail_large_d_against_scipy(d, h, p):
    from scipy.stats import binom
    assert an.binomial_tail(d, h, p) == pytest.approx(binom.sf(h - 1, d, p), rel=1e-9, abs=1e-300)


# -- recursion -----------------------------------------------------------------

def test_step_examples():
    for mode in an.MODES[:1] + an.MODES[2:]:
        assert an.recursion_step(0.0, 5, 3, 0.1, mode) == pytest.approx(0.1)
    assert an.recursion_step(0.5, 3, 2, 0.1, "paper_bound") == pytest.approx(0.6)
    assert an.recursion_step(0.5, 3, 2, 0.1, "exact_greedy") == pytest.approx(0.55)
    with pytest.raises(an.AnalysisError):
        an.recursion_step(0.1, 3, 2, 0.1, "nonsense")


@given(st.floats(0, 0.5), st.floats(0, 0.5), st.integers(1, 25).flatmap(
    lambda d: st.tuples(st.just(d), st.integers(1, d))))
@settings(max_examples=300, deadline=None)
def test_mode_ordering(P, eps, dh):
    d, h = dh
    pb = an.recursion_step(P, d, h, eps, "paper_bound")
    eg = an.recursion_step(P, d, h, eps, "exact_greedy")
    ep = an.recursion_step(P, d, h, eps, "exact_pure")
    assert pb >= eg - 1e-15
    assert eg >= ep - 1e-15


# majority-type thresholds (h > d/2); below that the pure-model step can
# decrease in eps because the tail exceeds 1/2
@given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 0.5),
       st.integers(1, 25).flatmap(lambda d: st.tuples(st.just(d), st.integers(d // 2 + 1, d))),
       st.sampled_from(an.MODES))
@settings(max_examples=300, deadline=None)
def test_step_monotone(P1, P2, e1, e2, dh, mode):
    d, h = dh
    P1, P2 = sorted((P1, P2))
    e1, e2 = sorted((e1, e2))
    f = lambda P, e: an.recursion_step(P, d, h, e, mode, m=min(1, d))
    assert f(P1, e1) <= f(P2, e1) + 1e-12
    assert f(P1, e1) <= f(P1, e2) + 1e-12


def test_pure_step_not_monotone_in_eps_below_majority():
    # d=2, h=1 at P=1/2: tail 3/4, so more faults pull the error down
    assert an.recursion_step(0.5, 2, 1, 0.0, "exact_pure") > an.recursion_step(0.5, 2, 1, 0.5, "exact_pure")


def test_iterate_examples():
    tr = an.iterate_recursion(31, 16, xi=0.4)
    assert tr.verdict == "tolerant"
    assert max(tr.P) <= 0.3
    assert tr.P[0] == 0.0
    bad = an.iterate_recursion(3, 2, xi=0.4)
    assert bad.verdict == "violated"
    assert bad.P[bad.violated_at] > 0.3
    zero = an.iterate_recursion(5, 3, eps=0.0)
    assert zero.verdict == "tolerant" and all(p == 0 for p in zero.P)


def test_iterate_consistency_check():
    with pytest.raises(an.AnalysisError):
        an.iterate_recursion(5, 3, eps=0.2, xi=0.4)
    assert an.iterate_recursion(5, 3, eps=0.1, xi=0.4).eps == 0.1


def test_iterate_custom_delta_and_cap():
    tr = an.iterate_recursion(31, 16, xi=0.4, delta=0.05)
    assert tr.verdict == "violated" and tr.violated_at == 1
    capped = an.iterate_recursion(3, 2, eps=0.01, t_max=2)
    assert len(capped.P) == 3


def test_trace_csv():
    text = an.iterate_recursion(3, 2, eps=0.1, t_max=2).to_csv().splitlines()
    assert text[0] == "t,P"
    assert text[1] == "0,0.0"
    assert text[2] == "1,0.1"


def test_tolerance_agreement_grid():
    for xi in (0.45, 0.4, 0.3, 0.2):
        for m in range(4):
            d = an.prop21_min_degree(xi, m)
            h = math.ceil((d - m) / 2)
            assert an.iterate_recursion(d, h, m, xi=xi).verdict == "tolerant", (xi, m)


# -- induction step -----------------------------------------------------------

def test_induction_gap_examples():
    assert an.induction_gap(0.4, 0, 1) == pytest.approx(0.2 - math.sqrt(0.84))
    assert an.induction_gap(0.4, 0, 10_000) == pytest.approx(0.2)
    for xi in (0.4, 0.2, 0.1):
        for m in range(4):
            assert an.induction_gap(xi, m, an.prop21_min_degree(xi, m)) >= 0


def test_induction_closure_random_points():
    rng = np.random.default_rng(20240601)
    for _ in range(200):
        xi = float(rng.uniform(0.02, 0.49))
        m = int(rng.integers(0, 6))
        d = an.prop21_min_degree(xi, m)
        eps = 0.5 - xi
        top = 0.5 - xi / 2
        for P in np.linspace(0, top, 17):
            val = eps + 2.0 ** m * (4 * P * (1 - P)) ** ((d - m) / 2)
            assert val <= top + 1e-12, (xi, m, d, P)


# -- degree bounds ------------------------------------------------------------

def test_prop21_examples():
    assert an.prop21_min_degree(0.4, 0) == 21
    assert an.prop21_min_degree(0.4, 1) == 30
    with pytest.raises(an.AnalysisError):
        an.prop21_min_degree(0.6, 0)


@given(st.floats(0.01, 0.49), st.floats(0.01, 0.49), st.integers(0, 4))
@settings(max_examples=100, deadline=None)
def test_prop21_nonincreasing(x1, x2, m):
    x1, x2 = sorted((x1, x2))
    assert an.prop21_min_degree(x1, m) >= an.prop21_min_degree(x2, m)


def test_cor23_examples():
    b = an.cor23_min_q(0.4)
    assert b.odd_q == 31 and b.even_q == 52


@pytest.mark.parametrize("xi", [0.45, 0.4, 0.3, 0.2, 0.1, 0.05, 0.01])
def test_bound_relations(xi):
    c23, c24 = an.cor23_min_q(xi), an.cor24_min_q(xi)
    assert c23.odd_q % 2 == 1 and c23.even_q % 2 == 0
    assert c23.odd_q >= an.prop21_min_degree(xi, 1) + 1
    assert c24.odd_q > c23.odd_q
    # parity-constrained minimality: q-2 fails the inequality
    x = xi
    even_val = 16 + 2 / x ** 2 * math.log(4096 / x)
    assert c24.even_q >= even_val > c24.even_q - 2
    odd_val = 2 + 2 / x ** 2 * math.log(4 / x)
    assert c23.odd_q >= odd_val > c23.odd_q - 2


def test_cor24_example():
    assert an.cor24_min_q(0.4).odd_q == 113


def test_thm42():
    assert an.thm42_min_degree(0.05) == 100
    assert an.thm42_min_degree(0.5) == 1
    with pytest.raises(an.AnalysisError):
        an.thm42_min_degree(0.0)


def test_gap_ratio_grows_logarithmically():
    xs = [0.4, 0.2, 0.1, 0.05]
    ratios = [an.cor23_min_q(x).odd_q / an.thm42_min_degree(x) for x in xs]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    # ratio / log(1/xi) stays within a constant band
    norm = [r / math.log(1 / x) for r, x in zip(ratios, xs)]
    assert max(norm) / min(norm) < 4


def test_bound_table_row():
    row = an.bound_table_row(0.4)
    assert list(row) == ["xi", "prop21_m0", "prop21_m1", "prop21_m2", "prop21_m3", "cor23_odd", "cor23_even",
                         "cor24_odd", "cor24_even", "thm42_lower"]
    assert row["prop21_m0"] == 21 and row["cor23_odd"] == 31 and row["cor24_odd"] == 113
    reps = an.bound_reports(0.4)
    assert {r.formula for r in reps} == {"prop21", "cor23_odd", "cor23_even", "cor24_odd", "cor24_even", "thm42_lower"}


def test_reduced_tree_degree_matches_odd_tree_bound():
    # r = 1: s >= 2 + (2/xi^2) ln(4/xi) is the odd tree bound without parity
    for xi in (0.4, 0.2):
        assert an.reduced_tree_required_degree(xi, 1) in (an.cor23_min_q(xi).odd_q, an.cor23_min_q(xi).odd_q - 1)


# -- entropy ----------------------------------------------------------------------

def test_entropy():
    assert an.binary_entropy(0.5) == 1.0
    assert an.binary_entropy(0.0) == 0.0
    assert an.binary_entropy(1.0) == 0.0
    for p in (0.01, 0.11, 0.3):
        assert an.binary_entropy(p) == pytest.approx(binary_entropy(p), abs=1e-15)


def test_fano_floor():
    assert an.fano_floor(0.11) == pytest.approx(0.5001, abs=5e-5)
    with pytest.raises(an.AnalysisError):
        an.fano_floor(0.5)
