"""Exact arithmetic over a prime field, plus exact rationals for costs.

Matrices are plain ``numpy.int64`` arrays holding canonical residues in
``[0, q)``.  Every matrix routine accepts trailing "batch" axes on the right
operand, so the same code can push a single codeword or a whole basis of
inputs through a linear map.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from .errors import DivideByZero, ShapeMismatch, SingularMatrix, ZeroInverse

_INT64_MAX = (1 << 63) - 1
MAX_MODULUS = 1 << 31

ExactRational = Fraction


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    n = max(n, 2)
    while not is_prime(n):
        n += 1
    return n


class PrimeField:
    """Arithmetic mod a prime ``q`` on int64 arrays."""

    def __init__(self, q: int):
        q = int(q)
        if not is_prime(q):
            raise ValueError(f"modulus {q} is not prime")
        if q >= MAX_MODULUS:
            raise ValueError(f"modulus {q} too large for int64 kernels (< 2**31)")
        self.q = q
        # number of products that can be summed before reducing
        self._chunk = max(1, _INT64_MAX // max(1, (q - 1) ** 2) - 1)

    def __repr__(self):
        return f"PrimeField({self.q})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.q == self.q

    def __hash__(self):
        return hash(("PrimeField", self.q))

    def array(self, values) -> np.ndarray:
        return np.asarray(values, dtype=np.int64) % self.q

    def zeros(self, shape) -> np.ndarray:
        return np.zeros(shape, dtype=np.int64)

    def eye(self, n: int) -> np.ndarray:
        return np.eye(n, dtype=np.int64)

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.integers(0, self.q, size=shape, dtype=np.int64)

    def inv(self, a: int) -> int:
        a = int(a) % self.q
        if a == 0:
            raise ZeroInverse("0 has no multiplicative inverse")
        return pow(a, self.q - 2, self.q)

    def neg(self, a: np.ndarray) -> np.ndarray:
        return (-a) % self.q

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``a @ b`` over the field; ``a`` is 2-D, ``b`` may carry batch axes."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.ndim != 2 or b.ndim < 1 or a.shape[1] != b.shape[0]:
            raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
        k = a.shape[1]
        out = np.zeros((a.shape[0],) + b.shape[1:], dtype=np.int64)
        for s in range(0, k, self._chunk):
            e = min(k, s + self._chunk)
            out += np.tensordot(a[:, s:e], b[s:e], axes=(1, 0)) % self.q
            out %= self.q
        return out

    def inverse(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64) % self.q
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeMismatch(f"inverse needs a square matrix, got {a.shape}")
        n = a.shape[0]
        m = np.concatenate([a, np.eye(n, dtype=np.int64)], axis=1)
        for col in range(n):
            nz = np.flatnonzero(m[col:, col])
            if nz.size == 0:
                raise SingularMatrix(f"matrix is singular (no pivot in column {col})")
            p = col + int(nz[0])
            if p != col:
                m[[col, p]] = m[[p, col]]
            m[col] = m[col] * self.inv(m[col, col]) % self.q
            f = m[:, col].copy()
            f[col] = 0
            m = (m - np.outer(f, m[col]) % self.q) % self.q
        return m[:, n:]

    def solve(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Return ``x`` with ``a @ x == b``; ``a`` square."""
        a = np.asarray(a)
        b = np.asarray(b)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape[0] != a.shape[0]:
            raise ShapeMismatch(f"solve needs square A matching B, got {a.shape}, {b.shape}")
        return self.matmul(self.inverse(a), b)

    def rank(self, a: np.ndarray) -> int:
        m = np.array(a, dtype=np.int64) % self.q
        if m.ndim != 2:
            raise ShapeMismatch("rank needs a 2-D matrix")
        rows, cols = m.shape
        r = 0
        for col in range(cols):
            if r == rows:
                break
            nz = np.flatnonzero(m[r:, col])
            if nz.size == 0:
                continue
            p = r + int(nz[0])
            if p != r:
                m[[r, p]] = m[[p, r]]
            m[r] = m[r] * self.inv(m[r, col]) % self.q
            below = m[r + 1:, col].copy()
            if below.any():
                m[r + 1:] = (m[r + 1:] - np.outer(below, m[r]) % self.q) % self.q
            r += 1
        return r


@dataclass(frozen=True)
class FieldElement:
    value: int
    q: int

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value) % self.q)

    def _other(self, other):
        if isinstance(other, FieldElement):
            if other.q != self.q:
                raise ValueError("mixed moduli")
            return other.value
        return int(other)

    def __add__(self, other):
        return FieldElement(self.value + self._other(other), self.q)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.value - self._other(other), self.q)

    def __rsub__(self, other):
        return FieldElement(self._other(other) - self.value, self.q)

    def __mul__(self, other):
        return FieldElement(self.value * self._other(other), self.q)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.q)

    def __truediv__(self, other):
        return self * fe_inv(FieldElement(self._other(other), self.q))

    def __int__(self):
        return self.value

    def inv(self) -> "FieldElement":
        return fe_inv(self)


def fe_inv(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise ZeroInverse("0 has no multiplicative inverse")
    return FieldElement(pow(a.value, a.q - 2, a.q), a.q)


class FieldMatrix:
    """Dense matrix over GF(q); a light wrapper around an int64 array."""

    def __init__(self, data, q: int):
        arr = np.asarray(data, dtype=np.int64)
        if arr.ndim != 2:
            raise ShapeMismatch(f"FieldMatrix must be 2-D, got shape {arr.shape}")
        self.field = PrimeField(q)
        self.data = arr % q

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @classmethod
    def identity(cls, n, q):
        return cls(np.eye(n, dtype=np.int64), q)

    @classmethod
    def zeros(cls, rows, cols, q):
        return cls(np.zeros((rows, cols), dtype=np.int64), q)

    def entry(self, r, c) -> FieldElement:
        return FieldElement(int(self.data[r, c]), self.q)

    def __getitem__(self, key):
        sub = self.data[key]
        if sub.ndim == 2:
            return FieldMatrix(sub, self.q)
        return sub

    def _check(self, other):
        if not isinstance(other, FieldMatrix) or other.q != self.q:
            raise ValueError("operands must be FieldMatrix over the same field")

    def __matmul__(self, other):
        self._check(other)
        return FieldMatrix(self.field.matmul(self.data, other.data), self.q)

    def __add__(self, other):
        self._check(other)
        if other.data.shape != self.data.shape:
            raise ShapeMismatch("shape mismatch in addition")
        return FieldMatrix(self.data + other.data, self.q)

    def __sub__(self, other):
        self._check(other)
        if other.data.shape != self.data.shape:
            raise ShapeMismatch("shape mismatch in subtraction")
        return FieldMatrix(self.data - other.data, self.q)

    def __neg__(self):
        return FieldMatrix(-self.data, self.q)

    def __eq__(self, other):
        return (
            isinstance(other, FieldMatrix)
            and other.q == self.q
            and other.data.shape == self.data.shape
            and bool(np.array_equal(other.data, self.data))
        )

    def __repr__(self):
        return f"FieldMatrix(q={self.q}, {self.data.tolist()})"

    @property
    def T(self):
        return FieldMatrix(self.data.T, self.q)

    def inverse(self):
        return FieldMatrix(self.field.inverse(self.data), self.q)

    def rank(self) -> int:
        return self.field.rank(self.data)


def mat_solve(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    """Solve ``a @ x == b`` by Gauss-Jordan elimination."""
    a._check(b)
    return FieldMatrix(a.field.solve(a.data, b.data), a.q)


def mat_rank(a: FieldMatrix) -> int:
    return a.rank()


def rat_arith(a, b, op: str) -> Fraction:
    a, b = Fraction(a), Fraction(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b == 0:
            raise DivideByZero(f"{a} / 0")
        return a / b
    raise ValueError(f"unknown rational op {op!r}")


def frac_str(x: Fraction) -> str:
    """Serialize a rational as ``num/den`` (always with a denominator)."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_frac(s: str) -> Fraction:
    return Fraction(s)
