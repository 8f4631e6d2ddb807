"""Scheme configuration and every quantity derived from it.

Per-block sequences are stored 1-indexed with a zero sentinel in slot 0, so
``d.alpha[i]`` is the i-th outer block height and ``d.lam[0] == 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache, reduce
from math import lcm

from .errors import InvalidParams, FieldTooSmall, InvalidSecurity, ThresholdViolated, TooManyDropouts
from .field import is_prime, next_prime, MAX_MODULUS


class Case(str, Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SystemParams:
    """(N, R_r, K_c, S) with an optional field modulus q.

    ``q=None`` means "use the smallest admissible prime".  The tuple itself
    is validated on construction; field size is checked by :func:`derive`.
    """

    N: int
    R_r: int
    K_c: int
    S: int
    q: int | None = None

    def __post_init__(self):
        N, R_r, K_c, S = self.N, self.R_r, self.K_c, self.S
        for name in ("N", "R_r", "K_c", "S"):
            if not isinstance(getattr(self, name), int) or isinstance(getattr(self, name), bool):
                raise InvalidParams(f"{name} must be an integer")
        if N < 1:
            raise InvalidParams("N >= 1 violated")
        if not 1 <= R_r <= N:
            raise InvalidParams(f"1 <= R_r <= N violated (R_r={R_r}, N={N})")
        if K_c < 1:
            raise InvalidParams(f"K_c >= 1 violated (K_c={K_c})")
        if not 0 <= S <= N:
            raise InvalidParams(f"0 <= S <= N violated (S={S}, N={N})")
        if S < K_c and S >= R_r:
            raise InvalidParams(f"S < R_r violated (S={S}, R_r={R_r}) while S < K_c")
        if S >= K_c and R_r < K_c:
            # R_r constrained servers would hold fewer than L symbols
            raise InvalidParams(f"R_r >= K_c violated (R_r={R_r}, K_c={K_c}) while S >= K_c")
        if self.q is not None:
            if not is_prime(self.q):
                raise InvalidParams(f"q={self.q} is not prime")
            if self.q >= MAX_MODULUS:
                raise InvalidParams(f"q={self.q} must be below 2**31")

    @property
    def constrained(self) -> bool:
        """True in the regime the storage scheme handles (S < K_c)."""
        return self.S < self.K_c

    def tuple(self):
        return (self.N, self.R_r, self.K_c, self.S)

    def to_dict(self):
        return {"N": self.N, "R_r": self.R_r, "K_c": self.K_c, "S": self.S, "q": self.q}


def omega(p: SystemParams) -> int:
    return p.R_r - p.S - 1 if p.S < p.K_c else p.R_r - p.K_c


@dataclass(frozen=True)
class DerivedParams:
    params: SystemParams
    q: int
    omega: int
    G1: int
    alpha: tuple
    beta: tuple
    gamma: tuple
    lam: tuple
    G2: int
    alpha_p: tuple
    beta_p: tuple
    gamma_p: tuple
    lam_p: tuple
    L: int
    L_p: int
    P: int
    well_posed: bool = field(default=False)

    @property
    def beta1(self) -> int:
        return self.beta[1]

    @property
    def alpha1(self) -> int:
        return self.alpha[1]

    @property
    def s1_len(self) -> int:
        """Symbols held by every server in its first part (lambda_{G1})."""
        return self.lam[self.G1]

    @property
    def group_len(self) -> int:
        """Columns of one re-encoded group (lambda'_{G2})."""
        return self.lam_p[self.G2]

    @property
    def s2_len(self) -> int:
        return self.P * self.group_len

    def summary(self) -> dict:
        p = self.params
        return {
            "N": p.N, "R_r": p.R_r, "K_c": p.K_c, "S": p.S, "q": self.q,
            "Omega": self.omega, "L": self.L, "L_prime": self.L_p, "P": self.P,
            "G1": self.G1, "alpha": list(self.alpha[1:]), "beta": list(self.beta[1:]),
            "gamma": list(self.gamma[1:]), "lambda": list(self.lam[1:]),
            "G2": self.G2, "alpha_prime": list(self.alpha_p[1:]),
            "beta_prime": list(self.beta_p[1:]), "gamma_prime": list(self.gamma_p[1:]),
            "lambda_prime": list(self.lam_p[1:]), "beta1": self.beta1,
            "wellPosed": self.well_posed,
        }


def _ladder(heights, L):
    """gamma/lambda sequences for a run of consecutive block heights."""
    gamma = [0]
    for i in range(1, len(heights)):
        if i == 1:
            g = L // heights[1]
        else:
            g = L // (heights[i] * heights[i - 1])
        gamma.append(g)
    lam = [0]
    for g in gamma[1:]:
        lam.append(lam[-1] + g)
    return tuple(gamma), tuple(lam)


@lru_cache(maxsize=None)
def derive(p: SystemParams) -> DerivedParams:
    """Derive the block structure and message length for S < K_c."""
    if p.S >= p.K_c:
        raise InvalidParams(
            f"storage scheme requires S < K_c (S={p.S}, K_c={p.K_c}); "
            "only cost bounds are available for this tuple"
        )
    N, R_r, K_c, S = p.tuple()
    om = R_r - S - 1
    a1 = max(K_c, N - om)
    G1 = a1 - K_c + 1
    alpha = (0,) + tuple(a1 - i + 1 for i in range(1, G1 + 1))
    beta = (0,) + tuple(a + om for a in alpha[1:])
    G2 = N - R_r + 1
    alpha_p = (0,) + tuple(N - S - om - i + 1 for i in range(1, G2 + 1))
    beta_p = (0,) + tuple(N - S - i + 1 for i in range(1, G2 + 1))
    if min(alpha[1:]) < 1 or min(alpha_p[1:]) < 1:
        raise InvalidParams(f"non-positive block height for {p.tuple()}")

    L = lcm(reduce(lcm, alpha[1:]), K_c * reduce(lcm, alpha_p[1:]))
    gamma, lam = _ladder(alpha, L)
    L_p = L // K_c
    gamma_p, lam_p = _ladder(alpha_p, L_p)

    for i in range(1, G1 + 1):
        if gamma[i] < 1 or (lam[i] * alpha[i] != L):
            raise InvalidParams(f"outer block {i} does not tile L={L}")
    for i in range(1, G2 + 1):
        if gamma_p[i] < 1 or (lam_p[i] * alpha_p[i] != L_p):
            raise InvalidParams(f"inner block {i} does not tile L'={L_p}")

    need = N + beta[1]
    q = p.q if p.q is not None else next_prime(need)
    if q < need:
        raise FieldTooSmall(f"q={q} < N + beta_1 = {need}")
    if q >= MAX_MODULUS:
        raise FieldTooSmall(f"no usable prime below 2**31 for {p.tuple()}")

    well = R_r <= a1 and N >= 2 * R_r - S - 1
    return DerivedParams(
        params=p, q=q, omega=om, G1=G1, alpha=alpha, beta=beta, gamma=gamma, lam=lam,
        G2=G2, alpha_p=alpha_p, beta_p=beta_p, gamma_p=gamma_p, lam_p=lam_p,
        L=L, L_p=L_p, P=K_c - S - 1, well_posed=well,
    )


def is_well_posed(p: SystemParams) -> bool:
    return p.S < p.K_c and derive(p).well_posed


def default_prime(p: SystemParams) -> int:
    return derive(SystemParams(p.N, p.R_r, p.K_c, p.S)).q


def normalize_dropouts(p: SystemParams, dropouts) -> tuple:
    """Sorted tuple of distinct 1-based server indices."""
    d = tuple(sorted(set(int(n) for n in dropouts)))
    if len(d) != len(list(dropouts)):
        raise InvalidParams(f"duplicate servers in dropout set {list(dropouts)}")
    for n in d:
        if not 1 <= n <= p.N:
            raise InvalidParams(f"server {n} outside [1, {p.N}]")
    return d


def split_dropouts(p: SystemParams, d) -> tuple:
    """(D1, D2): unconstrained and constrained parts of a dropout set."""
    d1 = tuple(n for n in d if n > p.S)
    d2 = tuple(n for n in d if n <= p.S)
    return d1, d2


def update_threshold(p: SystemParams, X: int) -> int:
    if not 0 <= X < p.R_r:
        raise InvalidSecurity(f"security level must satisfy 0 <= X < R_r={p.R_r}, got {X}")
    return p.N - omega(p) + X


def read_case(p: SystemParams, dropouts) -> Case:
    d = normalize_dropouts(p, dropouts)
    if len(d) > p.N - p.R_r:
        raise TooManyDropouts(f"|D|={len(d)} exceeds N-R_r={p.N - p.R_r}")
    return Case.CASE1 if len(d) <= p.N - omega(p) - p.K_c else Case.CASE2


def update_case(p: SystemParams, dropouts, X: int) -> Case:
    d = normalize_dropouts(p, dropouts)
    need = update_threshold(p, X)
    if p.N - len(d) < need:
        raise ThresholdViolated(need, p.N - len(d))
    return Case.CASE1 if len(d) + X <= p.R_r - p.K_c else Case.CASE2
