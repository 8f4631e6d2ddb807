"""Read planning, download extraction and successive interference cancellation."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .errors import ShapeMismatch, SingularMatrix, TooManyDropouts
from .field import PrimeField, frac_str
from .params import Case, SystemParams, derive, normalize_dropouts, omega, split_dropouts
from .staircase import CauchyCode, StaircaseProfile, inner_profile, outer_profile, reencode_row, reshape
from .storage import ClusterState


@dataclass(frozen=True)
class ReadPlan:
    params: SystemParams
    dropouts: tuple
    d1: tuple
    d2: tuple
    case: Case
    J: int = 0
    J1: int = 0
    J2: int = 0
    mu: tuple = ()

    @property
    def available(self) -> tuple:
        return tuple(n for n in range(1, self.params.N + 1) if n not in self.dropouts)

    def s1_cols(self, n: int) -> int:
        """Number of leading s1 symbols downloaded from server n."""
        d = derive(self.params)
        return d.lam[self.J] if self.case is Case.CASE1 else d.s1_len

    def s2_cols(self, n: int) -> tuple:
        if self.case is Case.CASE1 or n <= self.params.S:
            return ()
        return self.mu


def plan_read(p: SystemParams, dropouts) -> ReadPlan:
    d = derive(p)
    dset = normalize_dropouts(p, dropouts)
    if len(dset) > p.N - p.R_r:
        raise TooManyDropouts(f"|D|={len(dset)} exceeds N-R_r={p.N - p.R_r}")
    d1, d2 = split_dropouts(p, dset)
    if len(dset) <= p.N - omega(p) - p.K_c:
        return ReadPlan(p, dset, d1, d2, Case.CASE1, J=len(dset) + 1)
    J1 = p.K_c + d.omega - p.N + len(dset)
    J2 = len(d1) + 1
    w = d.group_len
    mu = tuple(c for g in range(J1) for c in range(g * w, g * w + d.lam_p[J2]))
    return ReadPlan(p, dset, d1, d2, Case.CASE2, J1=J1, J2=J2, mu=mu)


@dataclass
class ReadTranscript:
    plan: ReadPlan
    L: int
    a1: dict
    a2: dict = dc_field(default_factory=dict)

    @property
    def symbols(self) -> int:
        return sum(int(v.shape[0]) for v in self.a1.values()) + sum(int(v.shape[0]) for v in self.a2.values())

    @property
    def cost(self) -> Fraction:
        return Fraction(self.symbols, self.L)

    def to_json(self) -> dict:
        servers = {}
        for n in self.plan.available:
            servers[str(n)] = {
                "s1": list(range(1, int(self.a1[n].shape[0]) + 1)),
                "s2": [c + 1 for c in self.plan.s2_cols(n)],
            }
        return {
            "dropouts": list(self.plan.dropouts),
            "case": str(self.plan.case),
            "columns": servers,
            "cost": frac_str(self.cost),
        }


def execute_read(cluster: ClusterState, plan: ReadPlan) -> ReadTranscript:
    """Collect the planned downloads; storage is only read, never written."""
    if plan.params.tuple() != cluster.params.tuple():
        raise ShapeMismatch("plan and cluster disagree on parameters")
    a1, a2 = {}, {}
    for n in plan.available:
        srv = cluster.server(n)
        a1[n] = srv.s1[:plan.s1_cols(n)].copy()
        cols = plan.s2_cols(n)
        if cols:
            a2[n] = srv.s2[list(cols)].copy()
    return ReadTranscript(plan, cluster.derived.L, a1, a2)


def read_cost(t: ReadTranscript) -> Fraction:
    return t.cost


def sic_decode(field: PrimeField, c_av: np.ndarray, answers: np.ndarray, prof: StaircaseProfile,
               nblocks: int, cancelled: dict | None = None) -> dict:
    """Recover blocks nblocks..1 of a staircase from coded answers.

    ``c_av`` holds the generator rows of the responding servers (restricted to
    ``prof.total_rows`` columns) and ``answers`` their coded symbols for the
    first ``lam[nblocks]`` columns.  ``cancelled`` maps (block, row) to row
    values whose contribution has already been removed from ``answers``.
    Rows replicated into later blocks are subtracted here as they become
    known.  Returns {block: beta_i x gamma_i values}.
    """
    m = c_av.shape[0]
    cancelled = dict(cancelled or {})
    known = {}
    blocks = {}
    for i in range(nblocks, 0, -1):
        b = prof.beta[i]
        rhs = answers[:, prof.cols(i)]
        fixed = {r: v for (blk, r), v in cancelled.items() if blk == i}
        rep = {r: v for (blk, r), v in known.items() if blk == i}
        unknown = [r for r in range(1, b + 1) if r not in fixed and r not in rep]
        if len(unknown) != m:
            raise SingularMatrix(f"block {i}: {len(unknown)} unknown rows but {m} equations")
        if rep:
            rows = sorted(rep)
            vals = np.stack([rep[r] for r in rows])
            rhs = (rhs - field.matmul(c_av[:, [r - 1 for r in rows]], vals)) % field.q
        sol = field.solve(c_av[:, [r - 1 for r in unknown]], rhs)
        full = np.zeros((b,) + sol.shape[1:], dtype=np.int64)
        full[[r - 1 for r in unknown]] = sol
        for r, v in list(fixed.items()) + list(rep.items()):
            full[r - 1] = v
        blocks[i] = full
        if i >= 2:
            flat = full[:prof.alpha[i]].reshape((-1,) + full.shape[2:])
            for j in range(1, i):
                known[(j, prof.source_row(i, j))] = flat[prof.lam[j - 1]:prof.lam[j]]
    return blocks


def _message_from_block1(block1: np.ndarray, prof: StaircaseProfile) -> np.ndarray:
    return block1[:prof.alpha[1]].reshape((-1,) + block1.shape[2:])


def decode_case1(plan: ReadPlan, tr: ReadTranscript, code: CauchyCode) -> np.ndarray:
    d = derive(plan.params)
    prof = outer_profile(d)
    av = plan.available
    answers = np.stack([tr.a1[n] for n in av])
    blocks = sic_decode(code.field, code.rows(av)[:, :prof.total_rows], answers, prof, plan.J)
    return _message_from_block1(blocks[1], prof)


def recover_reencoded(plan: ReadPlan, tr: ReadTranscript, code: CauchyCode) -> dict:
    """Decode the first J1 inner groups; returns {(block j, outer row): values}."""
    p = plan.params
    d = derive(p)
    inner = inner_profile(d)
    outer = outer_profile(d)
    unc = [n for n in plan.available if n > p.S]
    c_unc = code.rows(unc)[:, :p.N - p.S]
    stacked = np.stack([tr.a2[n] for n in unc])
    per_group = d.lam_p[plan.J2]
    rows = {}
    for g in range(1, plan.J1 + 1):
        ans = stacked[:, (g - 1) * per_group:g * per_group]
        blocks = sic_decode(code.field, c_unc, ans, inner, plan.J2)
        w = _message_from_block1(blocks[1], inner)
        for j in range(1, d.G1 + 1):
            rows[(j, reencode_row(p, d.G1, j, g))] = w[outer.lam[j - 1]:outer.lam[j]]
    return rows


def corrected_answers(plan: ReadPlan, tr: ReadTranscript, code: CauchyCode, rows: dict) -> np.ndarray:
    """Remove the contribution of already-recovered outer rows from s1 answers."""
    d = derive(plan.params)
    prof = outer_profile(d)
    f = code.field
    av = plan.available
    c_av = code.rows(av)
    ans = np.stack([tr.a1[n] for n in av]).copy()
    for (j, r), v in rows.items():
        c = prof.cols(j)
        ans[:, c] = (ans[:, c] - f.matmul(c_av[:, [r - 1]], v[None, ...])) % f.q
    return ans


def decode_case2(plan: ReadPlan, tr: ReadTranscript, code: CauchyCode) -> np.ndarray:
    d = derive(plan.params)
    prof = outer_profile(d)
    rows = recover_reencoded(plan, tr, code)
    ans = corrected_answers(plan, tr, code, rows)
    c_av = code.rows(plan.available)[:, :prof.total_rows]
    blocks = sic_decode(code.field, c_av, ans, prof, d.G1, cancelled=rows)
    return _message_from_block1(blocks[1], prof)


def decode(plan: ReadPlan, tr: ReadTranscript, code: CauchyCode) -> np.ndarray:
    if plan.case is Case.CASE1:
        return decode_case1(plan, tr, code)
    return decode_case2(plan, tr, code)


def read_message(cluster: ClusterState, dropouts) -> tuple:
    """Plan, download and decode; returns (message, transcript)."""
    plan = plan_read(cluster.params, dropouts)
    tr = execute_read(cluster, plan)
    return decode(plan, tr, cluster.code), tr
