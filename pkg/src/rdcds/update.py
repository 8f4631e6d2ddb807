"""X-secure additive updates that leave dropped-out servers consistent."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .errors import InvalidSecurity, ShapeMismatch, ThresholdViolated
from .field import PrimeField, frac_str
from .params import Case, SystemParams, derive, normalize_dropouts, split_dropouts, update_threshold
from .staircase import StaircasePair, cauchy, pscgen
from .storage import ClusterState


@dataclass(frozen=True)
class UpdatePlan:
    params: SystemParams
    dropouts: tuple
    d1: tuple
    d2: tuple
    X: int
    case: Case
    threshold: int
    G1t: int = 0
    G1_raw: int = 0
    Pt: int = 0
    G2t: int = 0
    G2_raw: int = 0
    clamped: bool = False

    @property
    def available(self) -> tuple:
        return tuple(n for n in range(1, self.params.N + 1) if n not in self.dropouts)

    @property
    def s1_cols(self) -> int:
        """Leading s1 positions touched on every available server."""
        d = derive(self.params)
        return d.lam[self.G1t] if self.case is Case.CASE1 else d.s1_len

    @property
    def s2_cols(self) -> tuple:
        """s2 positions touched on available unconstrained servers."""
        if self.case is Case.CASE1:
            return ()
        d = derive(self.params)
        w = d.group_len
        return tuple(c for g in range(self.Pt) for c in range(g * w, g * w + d.lam_p[self.G2t]))

    def noisy_outer(self, i: int) -> bool:
        return self.case is Case.CASE2 or i <= self.G1t

    def noisy_inner(self, g: int, j: int) -> bool:
        return self.case is Case.CASE2 and g <= self.Pt and j <= self.G2t

    def noise_dim(self) -> int:
        """Number of fresh uniform symbols the encoder draws."""
        d = derive(self.params)
        outer = sum(d.gamma[i] for i in range(1, d.G1 + 1) if self.noisy_outer(i))
        inner = sum(d.gamma_p[j] for g in range(1, d.P + 1) for j in range(1, d.G2 + 1)
                    if self.noisy_inner(g, j))
        return self.X * (outer + inner)


def plan_update(p: SystemParams, dropouts, X: int) -> UpdatePlan:
    if not 0 <= X < p.R_r:
        raise InvalidSecurity(f"security level must satisfy 0 <= X < R_r={p.R_r}, got {X}")
    d = derive(p)
    dset = normalize_dropouts(p, dropouts)
    need = update_threshold(p, X)
    if p.N - len(dset) < need:
        raise ThresholdViolated(need, p.N - len(dset))
    d1, d2 = split_dropouts(p, dset)
    k = len(dset)
    if k + X <= p.R_r - p.K_c:
        raw = d.alpha1 + 1 - p.R_r + k + X
        return UpdatePlan(p, dset, d1, d2, X, Case.CASE1, need,
                          G1t=max(1, raw), G1_raw=raw, clamped=raw < 1)
    Pt = k + X + p.K_c - p.R_r
    raw = p.N - p.R_r - d.omega + 1 + len(d1) + X
    return UpdatePlan(p, dset, d1, d2, X, Case.CASE2, need, Pt=Pt,
                      G2t=max(1, raw), G2_raw=raw, clamped=raw < 1)


class RandomNoise:
    def __init__(self, field: PrimeField, rng: np.random.Generator, batch=()):
        self.field, self.rng, self.batch = field, rng, tuple(batch)

    def draw(self, shape) -> np.ndarray:
        """Fresh uniform symbols, independent across batch columns too."""
        return self.field.random(self.rng, tuple(shape) + self.batch)


class ZeroNoise:
    def __init__(self, batch=()):
        self.batch = tuple(batch)

    def draw(self, shape) -> np.ndarray:
        return np.zeros(tuple(shape) + self.batch, dtype=np.int64)


class BasisNoise:
    """Hands out unit vectors: noise symbol k is batch coordinate offset+k."""

    def __init__(self, offset: int, total: int):
        self.offset = offset
        self.batch = (offset + total,)
        self.used = 0

    def draw(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        out = np.zeros((count,) + self.batch, dtype=np.int64)
        out[np.arange(count), self.offset + self.used + np.arange(count)] = 1
        self.used += count
        return out.reshape(tuple(shape) + self.batch)


def build_h(field: PrimeField, c_drop: np.ndarray, body: np.ndarray, zdd: np.ndarray,
            a: int, X: int) -> np.ndarray:
    """Noise rows that make a block invisible to the dropped-out servers.

    Solves C(D, H-rows) H = -(C(D, message rows) body + C(D, Z-rows) Z) so
    that every dropout's coded view of the block is zero.
    """
    k = c_drop.shape[0]
    if k == 0:
        return np.zeros((0,) + body.shape[1:], dtype=np.int64)
    rhs = (field.matmul(c_drop[:, :a], body) + field.matmul(c_drop[:, a:a + X], zdd)) % field.q
    return field.neg(field.solve(c_drop[:, a + X:a + X + k], rhs))


def build_h_outer(plan: UpdatePlan, body: np.ndarray, zdd: np.ndarray, i: int) -> np.ndarray:
    d = derive(plan.params)
    code = cauchy(plan.params, d)
    return build_h(code.field, code.rows(plan.dropouts), body, zdd, d.alpha[i], plan.X)


def build_h_inner(plan: UpdatePlan, body: np.ndarray, zdd: np.ndarray, j: int) -> np.ndarray:
    p = plan.params
    d = derive(p)
    code = cauchy(p, d)
    return build_h(code.field, code.rows(plan.d1)[:, :p.N - p.S], body, zdd, d.alpha_p[j], plan.X)


@dataclass
class UpdateTranscript:
    plan: UpdatePlan
    L: int
    q1: dict
    q2: dict
    delta: np.ndarray
    # verifier-only material; never delivered to servers in this form
    zdd: dict = dc_field(default_factory=dict, repr=False)
    h: dict = dc_field(default_factory=dict, repr=False)
    pair: StaircasePair | None = dc_field(default=None, repr=False)

    @property
    def symbols(self) -> int:
        return sum(int(v.shape[0]) for v in self.q1.values()) + sum(int(v.shape[0]) for v in self.q2.values())

    @property
    def cost(self) -> Fraction:
        return Fraction(self.symbols, self.L)

    def upload(self, n: int) -> np.ndarray:
        """Everything server n receives, s1 part first."""
        parts = [self.q1[n]] + ([self.q2[n]] if n in self.q2 else [])
        return np.concatenate(parts, axis=0)

    def to_json(self) -> dict:
        return {
            "dropouts": list(self.plan.dropouts),
            "X": self.plan.X,
            "case": str(self.plan.case),
            "symbols": {str(n): [int(self.q1[n].shape[0]), int(self.q2[n].shape[0]) if n in self.q2 else 0]
                        for n in self.plan.available},
            "cost": frac_str(self.cost),
            "clampFlag": self.plan.clamped,
        }


def encode_increment(plan: UpdatePlan, delta, rng: np.random.Generator | None = None,
                     noise=None) -> UpdateTranscript:
    """Encode an increment into per-server coded uploads.

    ``noise`` overrides the noise source (anything with ``draw(shape)``); by
    default fresh uniform symbols come from ``rng``.  ``delta`` may carry
    trailing batch axes, in which case the noise source must match them.
    """
    p = plan.params
    d = derive(p)
    code = cauchy(p, d)
    f = code.field
    delta = np.asarray(delta, dtype=np.int64) % f.q
    if delta.shape[0] != d.L:
        raise ShapeMismatch(f"increment must have L={d.L} symbols, got {delta.shape[0]}")
    batch = delta.shape[1:]
    if noise is None:
        noise = RandomNoise(f, rng if rng is not None else np.random.default_rng(), batch)
    if tuple(noise.batch) != tuple(batch):
        raise ShapeMismatch("noise batch shape does not match the increment")

    om, X = d.omega, plan.X
    c_d = code.rows(plan.dropouts)
    c_d1 = code.rows(plan.d1)[:, :p.N - p.S]
    zdd, hh = {}, {}

    def layer(key, c_drop, a, g, body, noisy):
        z = np.zeros((om, g) + batch, dtype=np.int64)
        if not noisy:
            return z
        k = c_drop.shape[0]
        zz = noise.draw((X, g))
        h = build_h(f, c_drop, body, zz, a, X)
        z[:X] = zz
        z[X:X + k] = h
        zdd[key], hh[key] = zz, h
        return z

    def outer(i, body):
        return layer(("outer", i), c_d, d.alpha[i], d.gamma[i], body, plan.noisy_outer(i))

    def inner(g, j, body):
        return layer(("inner", g, j), c_d1, d.alpha_p[j], d.gamma_p[j], body, plan.noisy_inner(g, j))

    pair = pscgen(delta, outer, inner, d)
    k1 = plan.s1_cols
    nu = list(plan.s2_cols)
    av = plan.available
    up1 = f.matmul(code.rows(av), pair.M1[:, :k1])
    q1 = {n: up1[r] for r, n in enumerate(av)}
    q2 = {}
    unc = [n for n in av if n > p.S]
    if nu and unc:
        up2 = f.matmul(code.rows(unc)[:, :p.N - p.S], pair.M2[:, nu])
        q2 = {n: up2[r] for r, n in enumerate(unc)}
    return UpdateTranscript(plan, d.L, q1, q2, delta, zdd, hh, pair)


def update_cost(tr: UpdateTranscript) -> Fraction:
    return tr.cost


def apply_update(cluster: ClusterState, tr: UpdateTranscript) -> ClusterState:
    """Add coded increments in place; dropped-out servers are not touched."""
    p = tr.plan.params
    if p.tuple() != cluster.params.tuple():
        raise ShapeMismatch("transcript and cluster disagree on parameters")
    if tr.delta.ndim != 1:
        raise ShapeMismatch("cannot apply a batched transcript")
    q = cluster.field.q
    k1 = tr.plan.s1_cols
    nu = list(tr.plan.s2_cols)
    for n in tr.plan.available:
        srv = cluster.server(n)
        if tr.q1[n].shape != (k1,):
            raise ShapeMismatch(f"server {n}: upload length {tr.q1[n].shape} != {k1}")
        srv.s1[:k1] = (srv.s1[:k1] + tr.q1[n]) % q
        if n in tr.q2:
            srv.s2[nu] = (srv.s2[nu] + tr.q2[n]) % q
    cluster.reference_message = (cluster.reference_message + tr.delta) % q
    if tr.pair is not None:
        cluster.oracle.M1 = (cluster.oracle.M1 + tr.pair.M1) % q
        cluster.oracle.M2 = (cluster.oracle.M2 + tr.pair.M2) % q
    cluster.t += 1
    return cluster


def update_message(cluster: ClusterState, dropouts, X: int, delta, rng=None) -> UpdateTranscript:
    """Plan, encode and apply one update; returns the transcript."""
    plan = plan_update(cluster.params, dropouts, X)
    tr = encode_increment(plan, delta, rng)
    apply_update(cluster, tr)
    return tr
