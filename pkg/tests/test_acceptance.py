"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line."""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, all_tuples, well_posed_tuples
from rdcds.bounds import (_representative, build_read_lp, build_update_lp, closed_read_bound,
                          closed_update_bound, read_lp_bound, solve_lp, update_lp_bound, vertex_enumeration)
from rdcds.errors import InvalidSecurity, ThresholdViolated
from rdcds.field import PrimeField
from rdcds.params import SystemParams, derive, omega, update_case, update_threshold
from rdcds.read import read_message
from rdcds.security import check_all_subsets, check_staircase, increment_witness
from rdcds.staircase import pscgen, random_noise
from rdcds.storage import init_cluster, storage_fraction
from rdcds.update import apply_update, encode_increment, plan_update

WP8 = well_posed_tuples(8)
SAMPLED_READS = 10


def report(num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _storage(c):
    return [(s.s1.copy(), None if s.s2 is None else s.s2.copy()) for s in c.servers]


def _same(a, b, servers):
    return all(np.array_equal(a[n - 1][0], b[n - 1][0])
               and (a[n - 1][1] is None or np.array_equal(a[n - 1][1], b[n - 1][1])) for n in servers)


@pytest.fixture(scope="module")
def sweep():
    """Every read and update event on every well-posed tuple with N <= 8."""
    t0 = time.time()
    out = {"reads": [], "updates": [], "read_fail": [], "update_fail": [], "untouched_fail": []}
    for p in WP8:
        rng = np.random.default_rng(list(p.tuple()))
        c = init_cluster(p, rng=rng)
        every = list(range(1, p.N + 1))
        read_sets = [D for k in range(p.N - p.R_r + 1) for D in itertools.combinations(every, k)]
        before = _storage(c)
        for D in read_sets:
            got, tr = read_message(c, D)
            if not np.array_equal(got, c.reference_message):
                out["read_fail"].append((p.tuple(), D))
            if not _same(before, _storage(c), every):
                out["untouched_fail"].append((p.tuple(), "read", D))
            out["reads"].append((p, D, tr.cost))
        om = omega(p)
        for X in range(min(om, p.R_r - 1) + 1):
            for k in range(om - X + 1):
                for D in itertools.combinations(every, k):
                    pl = plan_update(p, D, X)
                    tr = encode_increment(pl, c.field.random(rng, (c.derived.L,)), rng)
                    pre = _storage(c)
                    apply_update(c, tr)
                    if not _same(pre, _storage(c), D):
                        out["untouched_fail"].append((p.tuple(), "update", D, X))
                    for idx in rng.choice(len(read_sets), SAMPLED_READS):
                        got, _ = read_message(c, read_sets[idx])
                        if not np.array_equal(got, c.reference_message):
                            out["update_fail"].append((p.tuple(), D, X, read_sets[idx]))
                    out["updates"].append((p, D, X, pl, tr))
    out["seconds"] = time.time() - t0
    return out


def test_criterion_1_golden_example():
    t0 = time.time()
    p = SystemParams(7, 5, 6, 2, 17)
    rng = np.random.default_rng(2024)
    w = rng.integers(0, 17, 36)
    c = init_cluster(p, message=w, rng=rng)
    fr = [storage_fraction(c, n) for n in range(1, 8)]
    got, rt = read_message(c, [3])
    pl = plan_update(p, [1], 1)
    delta = rng.integers(0, 17, 36)
    ut = encode_increment(pl, delta, rng)
    apply_update(c, ut)
    final, _ = read_message(c, [])
    ok = (fr == [Fraction(1, 6)] * 2 + [Fraction(2, 3)] * 5
          and np.array_equal(got, w) and rt.cost == Fraction(5, 3)
          and update_threshold(p, 1) == 6 and ut.cost == Fraction(9, 4)
          and np.array_equal(final, (w + delta) % 17))
    dt = time.time() - t0
    report(1, ok and dt < 5, f"fractions 1/6 and 2/3, read 5/3, threshold 6, update 9/4, W+D decoded ({dt:.2f}s)")


def test_criterion_2_round_trip_sweep(sweep):
    ok = not sweep["read_fail"] and not sweep["update_fail"]
    report(2, ok, f"{len(WP8)} tuples, {len(sweep['reads'])} reads, {len(sweep['updates'])} updates x "
                  f"{SAMPLED_READS} reads; failures {sweep['read_fail'][:1] + sweep['update_fail'][:1]} "
                  f"({sweep['seconds']:.0f}s)")


def test_criterion_3_triple_cost_equality(sweep):
    bad, clamped, gaps = [], 0, []
    for p, D, cost in sweep["reads"]:
        if not cost == closed_read_bound(p, D) == read_lp_bound(p, D):
            bad.append(("read", p.tuple(), D))
    for p, D, X, pl, tr in sweep["updates"]:
        lp = update_lp_bound(p, D, X)
        if pl.clamped:
            clamped += 1
            gaps.append(tr.cost - lp)
            if tr.cost < lp:
                bad.append(("update-clamped", p.tuple(), D, X))
        elif not tr.cost == closed_update_bound(p, D, X) == lp:
            bad.append(("update", p.tuple(), D, X))
    report(3, not bad, f"{len(sweep['reads']) + len(sweep['updates'])} events, {clamped} clamped "
                       f"(max gap {max(gaps) if gaps else 0}), mismatches {bad[:3]}")


def test_criterion_4_security_suite(sweep):
    t0 = time.time()
    rng = np.random.default_rng(4)
    bad, n_events, n_subsets = [], 0, 0
    for p, D, X, pl, tr in sweep["updates"]:
        if X < 1:
            continue
        n_events += 1
        res = check_all_subsets(pl)
        n_subsets += res.checks
        if not res.ok:
            bad.append(("security", p.tuple(), D, X, res.detail))
        if check_all_subsets(pl, drop_noise=True).ok:
            bad.append(("negative control", p.tuple(), D, X))
        rset = tuple(sorted(rng.choice(pl.available, p.R_r - len(D), replace=False).tolist()))
        xset = tuple(sorted(rng.choice(rset, X, replace=False).tolist()))
        if not increment_witness(pl, tr, rset, xset).ok:
            bad.append(("witness", p.tuple(), D, X, rset, xset))
    report(4, not bad, f"{n_events} secure update events, {n_subsets} colluding sets, negative control "
                       f"and witness per event; failures {bad[:2]} ({time.time() - t0:.0f}s)")


def test_criterion_5_structural_suite(sweep):
    bad = []
    for p in WP8:
        d = derive(p)
        f = PrimeField(d.q)
        rng = np.random.default_rng([5] + list(p.tuple()))
        for _ in range(100):
            o, i = random_noise(d, f, rng)
            if not check_staircase(pscgen(f.random(rng, (d.L,)), o, i, d)).ok:
                bad.append(("staircase", p.tuple()))
                break
    integral = 0
    for p in all_tuples(8):
        d = derive(p)
        integral += 1
        if not (all(d.gamma[i] >= 1 and d.lam[i] * d.alpha[i] == d.L for i in range(1, d.G1 + 1))
                and all(d.gamma_p[j] >= 1 and d.lam_p[j] * d.alpha_p[j] == d.L_p for j in range(1, d.G2 + 1))):
            bad.append(("gamma", p.tuple()))
    bad += sweep["untouched_fail"]
    report(5, not bad, f"100 staircase pairs x {len(WP8)} tuples, gamma integral on {integral} tuples, "
                       f"dropout storage unchanged in every event; failures {bad[:2]}")


def test_criterion_6_lp_vertex_enumeration():
    seen, n, bad = set(), 0, []
    for p in all_tuples(8, constrained_only=False):
        N, S = p.N, p.S
        for n2 in range(S + 1):
            for n1 in range(N - S + 1):
                if N - n1 - n2 > 5:
                    continue
                D = _representative(p, n1, n2)
                probs = []
                if n1 + n2 <= N - p.R_r:
                    probs.append(build_read_lp(p, D))
                for X in range(p.R_r):
                    try:
                        probs.append(build_update_lp(p, D, X))
                    except (ThresholdViolated, InvalidSecurity):
                        pass
                for prob in probs:
                    key = (prob.constraints, prob.cost)
                    if key in seen:
                        continue
                    seen.add(key)
                    n += 1
                    if solve_lp(prob).value != vertex_enumeration(prob):
                        bad.append((p.tuple(), D))
    report(6, not bad, f"{n} distinct LP instances with <= 5 variables, simplex == vertex enumeration; "
                       f"mismatches {bad[:2]}")


def test_criterion_7_threshold_boundary():
    bad, n = [], 0
    for p in all_tuples(8, constrained_only=False):
        om = omega(p)
        for X in range(min(om, p.R_r - 1) + 1):
            n += 1
            at, over = tuple(range(1, om - X + 1)), tuple(range(1, om - X + 2))
            try:
                update_case(p, at, X)
            except ThresholdViolated:
                bad.append(("rejected at boundary", p.tuple(), X))
            if len(over) <= p.N:
                try:
                    update_case(p, over, X)
                    bad.append(("accepted past boundary", p.tuple(), X))
                except ThresholdViolated:
                    pass
            if p.S < p.K_c and derive(p).well_posed:
                c = init_cluster(p, rng=np.random.default_rng(list(p.tuple()) + [X]))
                w = c.reference_message.copy()
                delta = c.field.random(np.random.default_rng(X), (c.derived.L,))
                apply_update(c, encode_increment(plan_update(p, at, X), delta, np.random.default_rng(0)))
                got, _ = read_message(c, ())
                if not np.array_equal(got, (w + delta) % c.field.q):
                    bad.append(("boundary update wrong", p.tuple(), X))
                if len(over) <= p.N:
                    with pytest.raises(ThresholdViolated):
                        plan_update(p, over, X)
    report(7, not bad, f"{n} (tuple, X) pairs: |D| = Omega - X accepted and executed, one more rejected; "
                       f"failures {bad[:2]}")
