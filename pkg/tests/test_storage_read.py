from fractions import Fraction
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import well_posed_tuples
from rdcds.errors import TooManyDropouts
from rdcds.params import Case, SystemParams, derive
from rdcds.read import decode, execute_read, plan_read, read_message
from rdcds.security import check_recoverability
from rdcds.storage import decode_hex, init_cluster, storage_fraction

WP7 = well_posed_tuples(7)


def test_golden_storage_fractions(golden):
    c = init_cluster(golden, rng=np.random.default_rng(1))
    assert c.server(1).size == 6 and c.server(7).size == 24
    assert [storage_fraction(c, n) for n in range(1, 8)] == [Fraction(1, 6)] * 2 + [Fraction(2, 3)] * 5


def test_zero_cluster(golden):
    c = init_cluster(golden, message=[0] * 36, zero_noise_=True)
    assert all(not c.server(n).s1.any() for n in range(1, 8))
    assert all(c.server(n).s2 is None for n in (1, 2))
    assert all(not c.server(n).s2.any() for n in range(3, 8))
    got, _ = read_message(c, [3])
    assert not got.any()


def test_same_seed_same_cluster(golden):
    a = init_cluster(golden, rng=np.random.default_rng(9))
    b = init_cluster(golden, rng=np.random.default_rng(9))
    assert a.snapshot() == b.snapshot()


def test_snapshot_round_trip(golden):
    c = init_cluster(golden, rng=np.random.default_rng(2))
    snap = c.snapshot()
    s = snap["servers"][2]
    assert s["n"] == 3 and snap["symbol_hex_width"] == 2
    assert np.array_equal(decode_hex(s["s1"], 2), c.server(3).s1)
    assert np.array_equal(decode_hex(s["s2"], 2), c.server(3).s2)


def test_read_plans(golden):
    pl = plan_read(golden, [3])
    assert pl.case == Case.CASE2 and (pl.J1, pl.J2) == (2, 2)
    assert [m + 1 for m in pl.mu] == [1, 2, 3, 7, 8, 9]
    pl = plan_read(SystemParams(9, 5, 3, 1), [])
    assert pl.case == Case.CASE1 and pl.J == 1 and pl.s1_cols(1) == derive(pl.params).lam[1]
    pl = plan_read(golden, [6, 7])
    assert (pl.J1, pl.J2) == (3, 3) and len(pl.mu) == 18
    with pytest.raises(TooManyDropouts):
        plan_read(golden, [1, 2, 3])


def test_golden_read_cost_and_decode(golden):
    c = init_cluster(golden, rng=np.random.default_rng(3))
    got, tr = read_message(c, [3])
    assert np.array_equal(got, c.reference_message)
    assert tr.cost == Fraction(5, 3)
    assert tr.to_json()["cost"] == "5/3"
    # two constrained servers send 6 symbols, four unconstrained send 6 + 6
    assert sorted(len(v) + len(tr.a2.get(n, ())) for n, v in tr.a1.items()) == [6, 6, 12, 12, 12, 12]
    _, tr0 = read_message(c, [])
    assert tr0.cost == Fraction(13, 9)


def test_case1_two_blocks():
    p = SystemParams(9, 5, 3, 1)
    c = init_cluster(p, rng=np.random.default_rng(4))
    pl = plan_read(p, [9])
    assert pl.J == 2
    got, _ = read_message(c, [9])
    assert np.array_equal(got, c.reference_message)


def test_corrupted_transcript_changes_output(golden):
    c = init_cluster(golden, rng=np.random.default_rng(5))
    pl = plan_read(golden, [3])
    tr = execute_read(c, pl)
    n = pl.available[0]
    tr.a1[n] = tr.a1[n].copy()
    tr.a1[n][0] = (tr.a1[n][0] + 1) % c.field.q
    assert not np.array_equal(decode(pl, tr, c.code), c.reference_message)


def test_recoverability_and_corruption(golden):
    c = init_cluster(golden, rng=np.random.default_rng(6))
    res = check_recoverability(c)
    assert res.ok and res.checks == 21
    c.server(1).s1[:] = 0
    assert not check_recoverability(c).ok


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(WP7), st.integers(0, 2**32 - 1), st.data())
def test_read_round_trip_and_non_mutation(p, seed, data):
    c = init_cluster(p, rng=np.random.default_rng(seed))
    k = data.draw(st.integers(0, p.N - p.R_r))
    drop = sorted(data.draw(st.permutations(range(1, p.N + 1)))[:k])
    before = c.snapshot()
    got, tr = read_message(c, drop)
    assert np.array_equal(got, c.reference_message)
    assert c.snapshot() == before
    d = derive(p)
    if tr.plan.case == Case.CASE1:
        assert all(tr.plan.s1_cols(n) <= d.s1_len for n in tr.plan.available)


@pytest.mark.parametrize("p", WP7[:40], ids=lambda p: "-".join(map(str, p.tuple())))
def test_storage_fraction_identities(p):
    c = init_cluster(p, rng=np.random.default_rng(0))
    for n in range(1, p.N + 1):
        want = Fraction(1, p.K_c) if n <= p.S else 1 - Fraction(p.S, p.K_c)
        assert storage_fraction(c, n) == want


def test_every_dropout_set_small_tuple(golden):
    c = init_cluster(golden, rng=np.random.default_rng(7))
    for k in range(golden.N - golden.R_r + 1):
        for drop in itertools.combinations(range(1, 8), k):
            got, _ = read_message(c, drop)
            assert np.array_equal(got, c.reference_message)
