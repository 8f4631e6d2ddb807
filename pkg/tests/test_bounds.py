from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from conftest import all_tuples
from rdcds.bounds import (LPProblem, averaging_certificate, build_read_lp, build_symmetric_lp,
                          build_update_lp, check_dual_feasible, closed_read_bound, closed_update_bound,
                          lp_min, read_lp_bound, solve_lp, symmetric_lp_bound, update_lp_bound,
                          vertex_enumeration)
from rdcds.errors import Infeasible, ThresholdViolated, TooManyDropouts, Unbounded
from rdcds.params import SystemParams, omega, update_threshold

ONE = Fraction(1)
SMALL = all_tuples(6, constrained_only=False)


def test_golden_read_lp(golden):
    prob = build_read_lp(golden, [3])
    assert prob.covering_count() == 15 and prob.cap_count() == 2
    res = solve_lp(prob)
    assert res.value == Fraction(5, 3)
    assert sum(res.x) == res.value


def test_golden_update_lp(golden):
    prob = build_update_lp(golden, [1], 1)
    assert prob.covering_count() == 60 and prob.cap_count() == 1
    assert lp_min(prob) == Fraction(9, 4)


def test_lp_shapes():
    p = SystemParams(5, 5, 6, 4)  # Omega = 0
    prob = build_read_lp(p, [])
    assert prob.covering_count() == 1
    p0 = SystemParams(6, 4, 3, 0)
    assert build_read_lp(p0, []).cap_count() == 0
    prob = build_update_lp(SystemParams(6, 4, 3, 0), [], 0)
    assert prob.covering_count() == 15  # all 4-subsets of 6
    p = SystemParams(6, 4, 3, 0)
    # N - |D| = R_r - |D|: the witness set is forced
    prob = build_update_lp(SystemParams(4, 4, 3, 0), [], 1)
    assert prob.covering_count() == 4


def test_closed_form_examples(golden):
    assert closed_read_bound(golden, [3]) == Fraction(5, 3)
    assert closed_read_bound(golden, []) == Fraction(13, 9)
    # 9 / (9 - 5 + 1 + 1) = 9/6
    assert closed_read_bound(SystemParams(9, 5, 3, 1), []) == Fraction(3, 2)
    assert read_lp_bound(SystemParams(9, 5, 3, 1), []) == Fraction(3, 2)
    assert closed_read_bound(SystemParams(7, 5, 2, 3), []) == Fraction(7, 4)
    assert closed_update_bound(golden, [1], 1) == Fraction(9, 4)
    assert closed_update_bound(SystemParams(9, 7, 2, 1), [], 0) == Fraction(9, 7)
    assert closed_update_bound(SystemParams(7, 5, 2, 3), [], 1) == Fraction(7, 4)
    with pytest.raises(TooManyDropouts):
        closed_read_bound(golden, [1, 2, 3])
    with pytest.raises(ThresholdViolated):
        closed_update_bound(golden, [1, 2], 1)


def test_tiny_lps():
    single = LPProblem((1, 2, 3), (((ONE, ONE, ONE), ">=", ONE),))
    assert lp_min(single) == 1
    with pytest.raises(Infeasible):
        lp_min(LPProblem((1,), (((ONE,), ">=", ONE), ((ONE,), "<=", Fraction(1, 2)))))
    with pytest.raises(Unbounded):
        lp_min(LPProblem((1,), (((ONE,), ">=", ONE),), (Fraction(-1),)))


lp_rows = st.lists(
    st.tuples(st.lists(st.integers(0, 3), min_size=3, max_size=3),
              st.sampled_from([">=", "<="]), st.integers(0, 4)),
    min_size=1, max_size=6)


@settings(max_examples=300, deadline=None)
@given(lp_rows, st.lists(st.integers(1, 4), min_size=3, max_size=3))
def test_simplex_matches_vertex_enumeration(rows, cost):
    prob = LPProblem((1, 2, 3), tuple((tuple(map(Fraction, c)), s, Fraction(r)) for c, s, r in rows),
                     tuple(map(Fraction, cost)))
    try:
        want = vertex_enumeration(prob)
    except Infeasible:
        with pytest.raises(Infeasible):
            lp_min(prob)
        return
    assert lp_min(prob) == want


@pytest.mark.parametrize("p", SMALL, ids=lambda p: "-".join(map(str, p.tuple())))
def test_closed_form_equals_lp_and_certificate(p):
    for k in range(p.N - p.R_r + 1):
        for drop in combinations(range(1, p.N + 1), k):
            prob = build_read_lp(p, drop)
            val = read_lp_bound(p, drop)
            assert val == closed_read_bound(p, drop)
            w, v = averaging_certificate(prob, p, "read")
            assert v == val and check_dual_feasible(prob, w)
            assert symmetric_lp_bound(p, drop, "read") == val
    for X in range(p.R_r):
        for k in range(p.N - update_threshold(p, X) + 1):
            for drop in combinations(range(1, p.N + 1), k):
                prob = build_update_lp(p, drop, X)
                val = update_lp_bound(p, drop, X)
                assert val == closed_update_bound(p, drop, X)
                w, v = averaging_certificate(prob, p, "update", X)
                assert v == val and check_dual_feasible(prob, w)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(SMALL), st.data())
def test_loosening_caps_is_monotone(p, data):
    k = data.draw(st.integers(0, p.N - p.R_r))
    drop = sorted(data.draw(st.permutations(range(1, p.N + 1)))[:k])
    prob = build_read_lp(p, drop)
    covering = [r for r in prob.constraints if r[1] == ">="]
    prev = lp_min(prob)
    for cap in (Fraction(2, p.K_c), Fraction(1), Fraction(10)):
        caps = [(c, s, cap) for c, s, _ in prob.constraints if s == "<="]
        cur = lp_min(LPProblem(prob.servers, tuple(covering + caps)))
        assert cur <= prev
        prev = cur
    m = p.N - k
    assert lp_min(LPProblem(prob.servers, tuple(covering))) == Fraction(m, m - omega(p))


def test_symmetric_lp_is_tiny(golden):
    prob = build_symmetric_lp(golden, [3], "read")
    assert prob.nvars == 2 and lp_min(prob) == Fraction(5, 3)
    assert symmetric_lp_bound(golden, [1], "update", 1) == Fraction(9, 4)
