"""Exact checks of security, recoverability and structure by linear algebra.

The update encoder is linear in (increment, fresh noise), so what a set of
colluding servers sees is ``A @ delta + B @ z``.  With uniform ``z`` that
view is independent of ``delta`` exactly when the column space of ``A``
lies inside the column space of ``B``, i.e. ``rank(B) == rank([A | B])``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InvalidSecurity, RDCDSError
from .params import Case, derive
from .read import ReadTranscript, decode, plan_read
from .staircase import (StaircasePair, inner_profile, outer_profile, reencode_input, replication_map,
                        reshape, cauchy)
from .storage import ClusterState
from .update import BasisNoise, UpdatePlan, UpdateTranscript, ZeroNoise, encode_increment

# linearize by brute force only while L + noise dimension stays below this
RANK_BUDGET = 700


@dataclass
class CheckResult:
    ok: bool
    detail: str = ""
    checks: int = 1

    def __bool__(self):
        return self.ok


@dataclass
class LinearizedEncoder:
    """Observation map of a set of servers: obs = A @ delta + B @ z."""

    A: np.ndarray
    B: np.ndarray
    servers: tuple
    row_owner: tuple

    def restrict(self, servers) -> "LinearizedEncoder":
        keep = [k for k, n in enumerate(self.row_owner) if n in set(servers)]
        return LinearizedEncoder(self.A[keep], self.B[keep], tuple(servers),
                                 tuple(self.row_owner[k] for k in keep))


def linearize(plan: UpdatePlan, servers=None, drop_noise: bool = False) -> LinearizedEncoder:
    """Push unit increments and unit noise symbols through the encoder.

    Column k of ``A`` is the stacked uploads for delta = e_k with zero noise;
    column k of ``B`` is the same for the k-th noise symbol.  ``drop_noise``
    removes the noise columns (a deliberately broken encoder for controls).
    """
    d = derive(plan.params)
    servers = tuple(plan.available if servers is None else servers)
    nz = plan.noise_dim()
    delta = np.zeros((d.L, d.L + nz), dtype=np.int64)
    delta[np.arange(d.L), np.arange(d.L)] = 1
    tr = encode_increment(plan, delta, noise=BasisNoise(d.L, nz))
    blocks, owner = [], []
    for n in servers:
        u = tr.upload(n)
        blocks.append(u)
        owner += [n] * u.shape[0]
    obs = np.concatenate(blocks, axis=0) if blocks else np.zeros((0, d.L + nz), dtype=np.int64)
    B = obs[:, d.L:d.L] if drop_noise else obs[:, d.L:]
    return LinearizedEncoder(obs[:, :d.L], B, servers, tuple(owner))


def _validate_subset(plan: UpdatePlan, xset) -> tuple:
    xset = tuple(sorted(set(xset)))
    if len(xset) != plan.X:
        raise InvalidSecurity(f"colluding set must have X={plan.X} servers, got {len(xset)}")
    bad = [n for n in xset if n not in plan.available]
    if bad:
        raise InvalidSecurity(f"servers {bad} are not available in this update")
    return xset


def _use_rank_route(plan: UpdatePlan) -> bool:
    return derive(plan.params).L + plan.noise_dim() <= RANK_BUDGET


def _schur(f, c, xs, ds, a, X, k, ncols):
    """C(X, Z) - C(X, H) C(D, H)^-1 C(D, Z) for Z = [a, a+X), H = [a+X, a+X+k)."""
    cx = c.rows(xs)[:, :ncols]
    z = slice(a, a + X)
    h = slice(a + X, a + X + k)
    g = cx[:, z]
    if k:
        cd = c.rows(ds)[:, :ncols]
        g = (g - f.matmul(cx[:, h], f.solve(cd[:, h], cd[:, z]))) % f.q
    return g


def security_certificate(plan: UpdatePlan, xset, drop_noise: bool = False) -> CheckResult:
    """Structural proof that the noise map B has full row rank.

    Ordering observations and noise symbols block by block, B is block
    lower-triangular: a block's uploads depend on its own fresh noise through
    a Schur complement of a Cauchy submatrix and otherwise only on earlier
    blocks.  So B has full row rank iff every uploaded block is noisy and each
    diagonal Schur complement has full row rank, which is computed here.
    """
    xset = _validate_subset(plan, xset)
    p = plan.params
    d = derive(p)
    code = cauchy(p, d)
    f = code.field
    if plan.X == 0 or not xset:
        return CheckResult(True, "no colluders")
    if drop_noise:
        # run the real encoder with its noise forced to zero on two random
        # increments; differing views mean the colluders see the increment
        rng = np.random.default_rng(list(xset))
        views = []
        for _ in range(2):
            tr = encode_increment(plan, f.random(rng, (d.L,)), noise=ZeroNoise())
            views.append(np.concatenate([tr.upload(n) for n in xset]))
        if not np.array_equal(*views):
            return CheckResult(False, "encoder without noise exposes the increment")
        return CheckResult(True, "views without noise do not depend on the increment")
    outer_blocks = range(1, (plan.G1t if plan.case is Case.CASE1 else d.G1) + 1)
    if d.lam[outer_blocks[-1]] != plan.s1_cols or not all(plan.noisy_outer(i) for i in outer_blocks):
        return CheckResult(False, "an uploaded outer block carries no fresh noise")
    for a in sorted({d.alpha[i] for i in outer_blocks}):
        g = _schur(f, code, xset, plan.dropouts, a, plan.X, len(plan.dropouts), d.beta1)
        if f.rank(g) != len(xset):
            return CheckResult(False, f"outer Schur complement at height {a} is rank deficient")
    xu = tuple(n for n in xset if n > p.S)
    if plan.case is Case.CASE2 and xu:
        cols = set(plan.s2_cols)
        w = d.group_len
        for g_ in range(1, d.P + 1):
            for j in range(1, d.G2 + 1):
                span = set(range((g_ - 1) * w + d.lam_p[j - 1], (g_ - 1) * w + d.lam_p[j]))
                if span & cols and not plan.noisy_inner(g_, j):
                    return CheckResult(False, f"uploaded inner block ({g_},{j}) carries no fresh noise")
        for j in range(1, plan.G2t + 1):
            g = _schur(f, code, xu, plan.d1, d.alpha_p[j], plan.X, len(plan.d1), p.N - p.S)
            if f.rank(g) != len(xu):
                return CheckResult(False, f"inner Schur complement for block {j} is rank deficient")
    return CheckResult(True, "block-triangular certificate")


def check_x_security(plan: UpdatePlan, xset, method: str = "auto", drop_noise: bool = False,
                     lin: LinearizedEncoder | None = None) -> bool:
    """True iff the uploads to ``xset`` are independent of the increment."""
    xset = _validate_subset(plan, xset)
    if plan.X == 0:
        return True
    if method == "auto":
        method = "rank" if (lin is not None or _use_rank_route(plan)) else "certificate"
    if method == "certificate":
        return security_certificate(plan, xset, drop_noise).ok
    if method != "rank":
        raise ValueError(f"unknown method {method!r}")
    if lin is None:
        lin = linearize(plan, xset, drop_noise)
    else:
        lin = lin.restrict(xset)
        if drop_noise:
            lin = LinearizedEncoder(lin.A, lin.B[:, :0], lin.servers, lin.row_owner)
    f = cauchy(plan.params, derive(plan.params)).field
    rb = f.rank(lin.B) if lin.B.size else 0
    rab = f.rank(np.concatenate([lin.A, lin.B], axis=1))
    return rb == rab


def check_all_subsets(plan: UpdatePlan, method: str = "auto", drop_noise: bool = False) -> CheckResult:
    """check_x_security over every X-subset of the available servers."""
    if plan.X == 0:
        return CheckResult(True, "X = 0", 0)
    if method == "auto":
        method = "rank" if _use_rank_route(plan) else "certificate"
    lin = linearize(plan, drop_noise=False) if method == "rank" else None
    n = 0
    for xs in combinations(plan.available, plan.X):
        n += 1
        if not check_x_security(plan, xs, method, drop_noise, lin):
            return CheckResult(False, f"colluding set {list(xs)} learns the increment", n)
    return CheckResult(True, f"{n} subsets via {method}", n)


def increment_witness(plan: UpdatePlan, tr: UpdateTranscript, rset, xset) -> CheckResult:
    """Recover the increment from the uploads of ``rset`` alone.

    The uploads of ``rset`` (plus the all-zero view of the dropouts) form a
    coded storage of the increment, so the read decoder must return it.  The
    uploads outside ``xset`` must also carry at least L symbols.
    """
    p = plan.params
    d = derive(p)
    code = cauchy(p, d)
    rset = tuple(sorted(rset))
    if len(rset) != p.R_r - len(plan.dropouts) or any(n not in plan.available for n in rset):
        raise InvalidSecurity("witness set must be R_r - |D| available servers")
    if not set(xset) <= set(rset) or len(set(xset)) != plan.X:
        raise InvalidSecurity("colluding set must be an X-subset of the witness set")
    size = sum(tr.upload(n).shape[0] for n in rset if n not in set(xset))
    if size < d.L:
        return CheckResult(False, f"uploads outside the colluders carry {size} < L={d.L} symbols")
    k1 = plan.s1_cols
    nu = list(plan.s2_cols)
    s1, s2 = {}, {}
    for n in rset + plan.dropouts:
        a = np.zeros(d.s1_len, dtype=np.int64)
        b = np.zeros(d.s2_len, dtype=np.int64)
        if n in tr.q1:
            a[:k1] = tr.q1[n]
        if n in tr.q2:
            b[nu] = tr.q2[n]
        s1[n], s2[n] = a, b
    others = [n for n in range(1, p.N + 1) if n not in rset and n not in plan.dropouts]
    rp = plan_read(p, others)
    a1 = {n: s1[n][:rp.s1_cols(n)] for n in rp.available}
    a2 = {n: s2[n][list(rp.s2_cols(n))] for n in rp.available if rp.s2_cols(n)}
    got = decode(rp, ReadTranscript(rp, d.L, a1, a2), code)
    if not np.array_equal(got, tr.delta):
        return CheckResult(False, "decoded increment differs")
    return CheckResult(True, f"increment recovered from servers {list(rset)}")


def check_recoverability(cluster: ClusterState, samples: int = 200, seed: int = 0) -> CheckResult:
    """Every R_r-subset (or a seeded sample when N > 8) decodes the message."""
    from .read import read_message

    p = cluster.params
    subsets = list(combinations(range(1, p.N + 1), p.R_r)) if p.N <= 8 else None
    if subsets is None:
        rng = np.random.default_rng(seed)
        subsets = [tuple(sorted(rng.choice(np.arange(1, p.N + 1), p.R_r, replace=False).tolist()))
                   for _ in range(samples)]
    for k, rs in enumerate(subsets):
        drop = [n for n in range(1, p.N + 1) if n not in rs]
        try:
            got, _ = read_message(cluster, drop)
        except (RDCDSError, ArithmeticError) as exc:
            return CheckResult(False, f"servers {list(rs)}: decoder failed ({exc})", k + 1)
        if not np.array_equal(got, cluster.reference_message):
            return CheckResult(False, f"servers {list(rs)} decode a different message", k + 1)
    return CheckResult(True, f"{len(subsets)} subsets decode", len(subsets))


def _check_profile(m: np.ndarray, prof, label: str) -> str | None:
    if m.shape[:2] != (prof.total_rows, prof.width):
        return f"{label}: shape {m.shape[:2]} != {(prof.total_rows, prof.width)}"
    for i in range(1, prof.G + 1):
        c = prof.cols(i)
        if np.any(m[prof.beta[i]:, c]):
            return f"{label}: block {i} rows beyond {prof.beta[i]} are not zero"
        if i == 1:
            continue
        for (r, col), (j, sr, sc) in replication_map(prof, i).items():
            if m[r - 1, prof.lam[i - 1] + col - 1] != m[sr - 1, prof.lam[j - 1] + sc - 1]:
                return f"{label}: block {i} entry ({r},{col}) differs from block {j} entry ({sr},{sc})"
    return None


def check_staircase(pair: StaircasePair) -> CheckResult:
    """Replication identities, zero rows and shapes of a generated pair."""
    d = pair.derived
    outer, inner = outer_profile(d), inner_profile(d)
    msg = _check_profile(pair.M1, outer, "M1")
    if msg:
        return CheckResult(False, msg)
    if pair.M2.shape[:2] != (inner.total_rows, d.s2_len):
        return CheckResult(False, f"M2: shape {pair.M2.shape[:2]} != {(inner.total_rows, d.s2_len)}")
    for g, grp in enumerate(pair.groups, start=1):
        msg = _check_profile(grp, inner, f"M2 group {g}")
        if msg:
            return CheckResult(False, msg)
        want = reshape(reencode_input(pair.M1, d, g), inner.alpha[1], inner.gamma[1])
        if not np.array_equal(grp[:inner.alpha[1], inner.cols(1)], want):
            return CheckResult(False, f"M2 group {g}: block 1 is not the re-encoded outer rows")
    return CheckResult(True, "staircase identities hold")
