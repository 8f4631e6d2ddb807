from fractions import Fraction
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rdcds.errors import DivideByZero, SingularMatrix, ZeroInverse
from rdcds.field import (FieldElement, FieldMatrix, PrimeField, fe_inv, frac_str, is_prime,
                         mat_rank, mat_solve, next_prime, parse_frac, rat_arith)

F17 = PrimeField(17)


def naive_rank(rows, q):
    """Plain-Python row reduction, used as an oracle for PrimeField.rank."""
    m = [list(int(v) % q for v in r) for r in rows]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        piv = next((r for r in range(rank, len(m)) if m[r][col]), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][col], q - 2, q)
        m[rank] = [v * inv % q for v in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col]
                m[r] = [(a - f * b) % q for a, b in zip(m[r], m[rank])]
        rank += 1
        col += 1
    return rank


def test_inverse_examples():
    assert fe_inv(FieldElement(1, 17)) == FieldElement(1, 17)
    assert fe_inv(FieldElement(5, 17)) == FieldElement(7, 17)
    with pytest.raises(ZeroInverse):
        fe_inv(FieldElement(0, 17))


def test_solve_examples():
    b = FieldMatrix([[3, 1], [4, 1], [5, 9]], 17)
    assert mat_solve(FieldMatrix.identity(3, 17), b) == b
    x = mat_solve(FieldMatrix([[1, 1], [1, 2]], 17), FieldMatrix([[3], [5]], 17))
    assert x == FieldMatrix([[1], [2]], 17)
    with pytest.raises(SingularMatrix):
        mat_solve(FieldMatrix([[1, 1], [2, 2]], 17), FieldMatrix([[1], [1]], 17))


def test_rank_examples():
    assert mat_rank(FieldMatrix.zeros(3, 4, 17)) == 0
    assert mat_rank(FieldMatrix.identity(4, 17)) == 4
    cauchy3 = [[pow(x - f, 15, 17) for f in (4, 5, 6)] for x in (1, 2, 3)]
    assert mat_rank(FieldMatrix(cauchy3, 17)) == 3 == naive_rank(cauchy3, 17)


def test_rational_examples():
    assert rat_arith(Fraction(5, 3), Fraction(0), "add") == Fraction(5, 3)
    assert rat_arith(Fraction(5, 2), Fraction(1, 4), "sub") == Fraction(9, 4)
    assert rat_arith(Fraction(2), Fraction(1, 3), "sub") == Fraction(5, 3)
    with pytest.raises(DivideByZero):
        rat_arith(Fraction(1), Fraction(0), "div")
    assert frac_str(Fraction(9, 4)) == "9/4"
    assert frac_str(Fraction(2)) == "2/1"
    assert parse_frac("13/9") == Fraction(13, 9)


def test_primes():
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert next_prime(15) == 17 and next_prime(17) == 17


def test_field_axioms_exhaustive_q7():
    q = 7
    els = [FieldElement(v, q) for v in range(q)]
    for a, b, c in itertools.product(els, repeat=3):
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
    for a in els[1:]:
        assert a * a.inv() == FieldElement(1, q)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 16), st.integers(0, 16), st.integers(0, 16))
def test_field_axioms_q17(a, b, c):
    a, b, c = (FieldElement(v, 17) for v in (a, b, c))
    assert a * (b + c) == a * b + a * c
    assert (a - b) + b == a
    assert -(-a) == a


square = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.lists(st.integers(0, 16), min_size=n, max_size=n), min_size=n, max_size=n))
rect = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda s: st.lists(st.lists(st.integers(0, 16), min_size=s[1], max_size=s[1]),
                       min_size=s[0], max_size=s[0]))


@settings(max_examples=200, deadline=None)
@given(square, st.integers(0, 2**32 - 1))
def test_solve_remultiplies(a, seed):
    n = len(a)
    b = np.random.default_rng(seed).integers(0, 17, (n, 2))
    if naive_rank(a, 17) < n:
        with pytest.raises(SingularMatrix):
            F17.solve(np.array(a), b)
        return
    x = F17.solve(np.array(a), b)
    assert np.array_equal(F17.matmul(np.array(a), x), b % 17)


@settings(max_examples=200, deadline=None)
@given(rect)
def test_rank_matches_oracle_and_transpose(a):
    arr = np.array(a)
    r = F17.rank(arr)
    assert r == naive_rank(a, 17)
    assert r == F17.rank(arr.T)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matmul_matches_naive_with_batch(seed):
    rng = np.random.default_rng(seed)
    f = PrimeField(2_147_483_647)
    a = f.random(rng, (3, 4))
    b = f.random(rng, (4, 2, 3))
    got = f.matmul(a, b)
    for i, j, k in itertools.product(range(3), range(2), range(3)):
        assert got[i, j, k] == sum(int(a[i, t]) * int(b[t, j, k]) for t in range(4)) % f.q


@given(st.fractions(), st.fractions())
def test_rationals_exact(a, b):
    assert rat_arith(rat_arith(a, b, "add"), b, "sub") == a
    assert parse_frac(frac_str(a)) == a
