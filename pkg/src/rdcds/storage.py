"""Per-server storage for the cluster and the coordinator's initial encoding."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .errors import InvalidParams, ShapeMismatch
from .params import DerivedParams, SystemParams, derive
from .staircase import CauchyCode, StaircasePair, cauchy, pscgen, random_noise, zero_noise


@dataclass
class ServerStorage:
    n: int
    s1: np.ndarray
    s2: np.ndarray | None = None

    @property
    def size(self) -> int:
        return int(self.s1.shape[0]) + (0 if self.s2 is None else int(self.s2.shape[0]))

    def same_as(self, other: "ServerStorage") -> bool:
        if self.n != other.n or not np.array_equal(self.s1, other.s1):
            return False
        if (self.s2 is None) != (other.s2 is None):
            return False
        return self.s2 is None or bool(np.array_equal(self.s2, other.s2))


def encode_storage(code: CauchyCode, d: DerivedParams, m1: np.ndarray, m2: np.ndarray) -> list:
    """Storage of every server for a given pair of staircase matrices."""
    p = d.params
    f = code.field
    s1 = f.matmul(code.C, m1)
    s2 = f.matmul(code.C[p.S:, :p.N - p.S], m2) if p.N > p.S else None
    out = []
    for n in range(1, p.N + 1):
        part2 = s2[n - 1 - p.S].copy() if n > p.S else None
        out.append(ServerStorage(n, s1[n - 1].copy(), part2))
    return out


@dataclass
class ClusterState:
    """Servers plus the simulator-side oracle.

    ``reference_message`` and the staircase pair ``oracle`` describe what the
    servers are supposed to encode.  Protocol code never reads them; they
    exist so tests and the verifier can compare against ground truth.
    """

    params: SystemParams
    derived: DerivedParams
    code: CauchyCode
    servers: list
    reference_message: np.ndarray
    oracle: StaircasePair
    t: int = 0
    history: list = dc_field(default_factory=list)

    @property
    def field(self):
        return self.code.field

    def server(self, n: int) -> ServerStorage:
        return self.servers[n - 1]

    def copy(self) -> "ClusterState":
        return copy.deepcopy(self)

    def storage_equal(self, other: "ClusterState", servers=None) -> bool:
        idx = servers if servers is not None else range(1, self.params.N + 1)
        return all(self.server(n).same_as(other.server(n)) for n in idx)

    def snapshot(self) -> dict:
        """JSON-friendly dump with hex-encoded symbols."""
        width = max(1, ((self.field.q - 1).bit_length() + 3) // 4)
        def enc(a):
            return "".join(f"{int(v):0{width}x}" for v in a)
        return {
            "params": self.params.to_dict() | {"q": self.field.q},
            "t": self.t,
            "symbol_hex_width": width,
            "servers": [
                {"n": s.n, "s1": enc(s.s1), "s2": None if s.s2 is None else enc(s.s2)}
                for s in self.servers
            ],
        }


def decode_hex(text: str, width: int) -> np.ndarray:
    if len(text) % width:
        raise ShapeMismatch("hex payload is not a whole number of symbols")
    return np.array([int(text[k:k + width], 16) for k in range(0, len(text), width)], dtype=np.int64)


def init_cluster(p: SystemParams, message=None, rng: np.random.Generator | None = None,
                 zero_noise_: bool = False) -> ClusterState:
    """Encode an initial message and hand every server its share.

    ``message`` may be an explicit length-L sequence or None (uniformly
    random from ``rng``).  Noise is uniform unless ``zero_noise_`` is set.
    """
    if p.S >= p.K_c:
        raise InvalidParams("storage construction needs S < K_c")
    d = derive(p)
    code = cauchy(p, d)
    f = code.field
    rng = rng if rng is not None else np.random.default_rng(0)
    if message is None:
        w = f.random(rng, (d.L,))
    else:
        w = np.asarray(message, dtype=np.int64)
        if w.shape != (d.L,):
            raise InvalidParams(f"initial message must have L={d.L} symbols, got {w.shape}")
        w = w % f.q
    outer, inner = zero_noise(d) if zero_noise_ else random_noise(d, f, rng)
    pair = pscgen(w, outer, inner, d)
    servers = encode_storage(code, d, pair.M1, pair.M2)
    return ClusterState(p, d, code, servers, w.copy(), pair, 0)


def storage_fraction(c: ClusterState, n: int) -> Fraction:
    if not 1 <= n <= c.params.N:
        raise InvalidParams(f"server {n} outside [1, {c.params.N}]")
    return Fraction(c.server(n).size, c.derived.L)
