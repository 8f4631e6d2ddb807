"""Converse bounds: closed forms, covering LPs and an exact rational simplex."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, lcm

from .errors import Infeasible, ThresholdViolated, TooManyDropouts, Unbounded
from .params import SystemParams, normalize_dropouts, omega, split_dropouts, update_threshold

ONE = Fraction(1)
ZERO = Fraction(0)


@dataclass(frozen=True)
class LPProblem:
    """minimize sum(x) subject to rows ``coef . x (>=|<=|==) rhs`` and x >= 0.

    ``servers`` names the variables (available server indices).
    """

    servers: tuple
    constraints: tuple  # of (coef tuple, sense, rhs)
    objective: tuple | None = None

    @property
    def nvars(self) -> int:
        return len(self.servers)

    @property
    def cost(self) -> tuple:
        return self.objective if self.objective is not None else (ONE,) * self.nvars

    def covering_count(self) -> int:
        return sum(1 for _, s, _ in self.constraints if s == ">=")

    def cap_count(self) -> int:
        return sum(1 for _, s, _ in self.constraints if s == "<=")


@dataclass
class LPResult:
    value: Fraction
    x: tuple
    y: tuple | None = None


def _caps(p: SystemParams, avail):
    out = []
    for k, n in enumerate(avail):
        if n <= p.S:
            row = [ZERO] * len(avail)
            row[k] = ONE
            out.append((tuple(row), "<=", Fraction(1, p.K_c)))
    return out


def build_read_lp(p: SystemParams, dropouts) -> LPProblem:
    d = normalize_dropouts(p, dropouts)
    if len(d) > p.N - p.R_r:
        raise TooManyDropouts(f"|D|={len(d)} exceeds N-R_r={p.N - p.R_r}")
    avail = tuple(n for n in range(1, p.N + 1) if n not in d)
    om = omega(p)
    rows = []
    for xs in combinations(range(len(avail)), om):
        skip = set(xs)
        rows.append((tuple(ZERO if k in skip else ONE for k in range(len(avail))), ">=", ONE))
    return LPProblem(avail, tuple(rows + _caps(p, avail)))


def build_update_lp(p: SystemParams, dropouts, X: int) -> LPProblem:
    d = normalize_dropouts(p, dropouts)
    need = update_threshold(p, X)
    if p.N - len(d) < need:
        raise ThresholdViolated(need, p.N - len(d))
    avail = tuple(n for n in range(1, p.N + 1) if n not in d)
    rows = []
    for rset in combinations(range(len(avail)), p.R_r - len(d)):
        for xs in combinations(rset, X):
            keep = set(rset) - set(xs)
            rows.append((tuple(ONE if k in keep else ZERO for k in range(len(avail))), ">=", ONE))
    return LPProblem(avail, tuple(rows + _caps(p, avail)))


def _as_geq(prob: LPProblem):
    """All constraints as ``g . x >= h``, duplicates removed, order kept."""
    seen = set()
    out = []
    for coef, sense, rhs in prob.constraints:
        coef = tuple(Fraction(c) for c in coef)
        rhs = Fraction(rhs)
        if len(coef) != prob.nvars:
            raise ValueError("constraint width does not match variable count")
        forms = {">=": [(coef, rhs)], "<=": [(tuple(-c for c in coef), -rhs)],
                 "==": [(coef, rhs), (tuple(-c for c in coef), -rhs)]}
        if sense not in forms:
            raise ValueError(f"unknown constraint sense {sense!r}")
        for row in forms[sense]:
            if row not in seen:
                seen.add(row)
                out.append(row)
    return out


def _simplex_max(A, b, c):
    """Two-phase tableau simplex for ``max c.y  s.t.  A y = b, y >= 0``.

    Bland's rule throughout.  Returns (value, y, pi) where ``pi`` are the
    optimal multipliers of the equality rows (in the caller's orientation).
    """
    m, n = len(A), len(c)
    sign = [(-1 if b[i] < 0 else 1) for i in range(m)]
    # tableau columns: n originals, m artificials, rhs
    T = []
    for i in range(m):
        row = [sign[i] * A[i][j] for j in range(n)]
        row += [ONE if k == i else ZERO for k in range(m)]
        row.append(sign[i] * b[i])
        T.append(row)
    basis = [n + i for i in range(m)]
    width = n + m

    def run(cost, allowed):
        # reduced costs z_j = c_B B^-1 A_j - c_j, kept up to date by pivot()
        z = [sum((cost[basis[i]] * T[i][j] for i in range(m) if T[i][j]), ZERO) - cost[j]
             for j in range(width)] + [ZERO]
        while True:
            enter = next((j for j in range(width) if allowed[j] and z[j] < 0 and j not in basis), None)
            if enter is None:
                return
            leave, best = None, None
            for i in range(m):
                if T[i][enter] > 0:
                    ratio = T[i][-1] / T[i][enter]
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        leave, best = i, ratio
            if leave is None:
                raise Unbounded("objective unbounded")
            pivot(leave, enter, z)

    def pivot(r, j, z=None):
        pv = T[r][j]
        T[r] = [v / pv if v else v for v in T[r]]
        prow = T[r]
        nz = [k for k, v in enumerate(prow) if v]
        rows = [T[i] for i in range(m) if i != r] + ([z] if z is not None else [])
        for row in rows:
            f = row[j]
            if f:
                for k in nz:
                    row[k] = row[k] - f * prow[k]
        basis[r] = j

    phase1 = [ZERO] * n + [-ONE] * m
    run(phase1, [True] * width)
    if sum((T[i][-1] for i in range(m) if basis[i] >= n), ZERO) != 0:
        raise Infeasible("constraints have no feasible point")
    for i in range(m):
        if basis[i] >= n:
            for j in range(n):
                if T[i][j] != 0:
                    pivot(i, j)
                    break
    cost = list(c) + [ZERO] * m
    run(cost, [True] * n + [False] * m)
    y = [ZERO] * n
    for i in range(m):
        if basis[i] < n:
            y[basis[i]] = T[i][-1]
    value = sum((c[j] * y[j] for j in range(n)), ZERO)
    cb = [cost[basis[i]] for i in range(m)]
    pi = [sign[k] * sum((cb[i] * T[i][n + k] for i in range(m)), ZERO) for k in range(m)]
    return value, y, pi


def solve_lp(prob: LPProblem) -> LPResult:
    """Exact optimum of ``prob``, computed through its dual.

    The dual of ``min c.x, Gx >= h, x >= 0`` is ``max h.y, G^T y <= c,
    y >= 0``; the primal point is read back from the dual multipliers and
    checked against every constraint before returning.
    """
    rows = _as_geq(prob)
    nv = prob.nvars
    c = [Fraction(v) for v in prob.cost]
    if not rows:
        if any(v < 0 for v in c):
            raise Unbounded("objective unbounded")
        return LPResult(ZERO, (ZERO,) * nv, ())
    ny = len(rows)
    # G^T y + s = c
    A = [[rows[i][0][k] for i in range(ny)] + [ONE if kk == k else ZERO for kk in range(nv)]
         for k in range(nv)]
    cost = [rows[i][1] for i in range(ny)] + [ZERO] * nv
    try:
        value, yv, pi = _simplex_max(A, c, cost)
    except Unbounded:
        raise Infeasible("primal infeasible (dual unbounded)") from None
    except Infeasible:
        raise Unbounded("primal unbounded (dual infeasible)") from None
    x = tuple(pi)
    for g, h in rows:
        if sum((gi * xi for gi, xi in zip(g, x)), ZERO) < h:
            raise ArithmeticError("recovered primal point violates a constraint")
    if any(v < 0 for v in x) or sum((ci * xi for ci, xi in zip(c, x)), ZERO) != value:
        raise ArithmeticError("recovered primal point is not optimal")
    return LPResult(value, x, tuple(yv[:ny]))


def lp_min(prob: LPProblem) -> Fraction:
    return solve_lp(prob).value


def _integer_rows(rows):
    """Scale each ``g . x >= h`` row by its denominators' lcm."""
    out = []
    for g, h in rows:
        m = lcm(*(Fraction(v).denominator for v in (*g, h)))
        out.append((tuple(int(v * m) for v in g), int(h * m)))
    return out


def _bareiss_solve(M, v):
    """Fraction-free solve of a square integer system.

    Returns (det, y) with M @ y = det * v, or None when M is singular.
    """
    n = len(M)
    A = [list(M[i]) + [v[i]] for i in range(n)]
    sign, prev = 1, 1
    for k in range(n):
        piv = next((r for r in range(k, n) if A[r][k]), None)
        if piv is None:
            return None
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            sign = -sign
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            row_i, row_k = A[i], A[k]
            for j in range(k + 1, n + 1):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = akk
    det = A[n - 1][n - 1]
    # back substitution scaled by det keeps everything integral
    y = [0] * n
    for i in range(n - 1, -1, -1):
        acc = A[i][n] * det - sum(A[i][j] * y[j] for j in range(i + 1, n))
        y[i] = acc // A[i][i]
    return det * sign, [yi * sign for yi in y]


def vertex_enumeration(prob: LPProblem) -> Fraction:
    """Brute-force optimum: try every basic solution, keep the feasible best."""
    nv = prob.nvars
    rows = _as_geq(prob)
    rows += [(tuple(ONE if k == j else ZERO for k in range(nv)), ZERO) for j in range(nv)]
    rows = _integer_rows(rows)
    c = [Fraction(v) for v in prob.cost]
    best = None
    for pick in combinations(range(len(rows)), nv):
        sol = _bareiss_solve([rows[i][0] for i in pick], [rows[i][1] for i in pick])
        if sol is None:
            continue
        det, y = sol
        if det < 0:
            det, y = -det, [-v for v in y]
        # x = y / det with det > 0, so g.x >= h  <=>  g.y >= h * det
        if all(sum(gi * yi for gi, yi in zip(g, y)) >= h * det for g, h in rows):
            val = sum((ci * yi for ci, yi in zip(c, y)), ZERO) / det
            if best is None or val < best:
                best = val
    if best is None:
        raise Infeasible("no feasible vertex")
    return best


def _class_key(p: SystemParams, dropouts):
    d = normalize_dropouts(p, dropouts)
    d1, d2 = split_dropouts(p, d)
    return (p.N, p.R_r, p.K_c, p.S, len(d1), len(d2))


def _representative(p: SystemParams, n1: int, n2: int) -> tuple:
    return tuple(range(1, n2 + 1)) + tuple(range(p.N - n1 + 1, p.N + 1))


@lru_cache(maxsize=None)
def _read_lp_class(N, R_r, K_c, S, n1, n2) -> Fraction:
    p = SystemParams(N, R_r, K_c, S)
    return lp_min(build_read_lp(p, _representative(p, n1, n2)))


@lru_cache(maxsize=None)
def _update_lp_class(N, R_r, K_c, S, n1, n2, X) -> Fraction:
    p = SystemParams(N, R_r, K_c, S)
    return lp_min(build_update_lp(p, _representative(p, n1, n2), X))


def read_lp_bound(p: SystemParams, dropouts) -> Fraction:
    """LP minimum for a read, cached per symmetry class.

    The LP only depends on how many constrained and unconstrained servers
    dropped out, so one solve covers every relabelling.
    """
    return _read_lp_class(*_class_key(p, dropouts))


def update_lp_bound(p: SystemParams, dropouts, X: int) -> Fraction:
    k = _class_key(p, dropouts)
    need = update_threshold(p, X)
    if p.N - k[4] - k[5] < need:
        raise ThresholdViolated(need, p.N - k[4] - k[5])
    return _update_lp_class(*k, X)


def closed_read_bound(p: SystemParams, dropouts) -> Fraction:
    d = normalize_dropouts(p, dropouts)
    N, R_r, K_c, S = p.tuple()
    k = len(d)
    if k > N - R_r:
        raise TooManyDropouts(f"|D|={k} exceeds N-R_r={N - R_r}")
    if S >= K_c:
        return Fraction(N - k, N - R_r + K_c - k)
    if k <= N - omega(p) - K_c:
        return Fraction(N - k, N - k - R_r + S + 1)
    d1, d2 = split_dropouts(p, d)
    den = N - len(d1) - R_r + 1
    return Fraction(N - S - len(d1), den) - Fraction((S - len(d2)) * (R_r - S - 1), K_c * den)


def closed_update_bound(p: SystemParams, dropouts, X: int) -> Fraction:
    d = normalize_dropouts(p, dropouts)
    N, R_r, K_c, S = p.tuple()
    k = len(d)
    need = update_threshold(p, X)
    if N - k < need:
        raise ThresholdViolated(need, N - k)
    if S >= K_c or k + X <= R_r - K_c:
        return Fraction(N - k, R_r - k - X)
    d1, d2 = split_dropouts(p, d)
    den = R_r - S - len(d1) - X
    return Fraction(N - S - len(d1), den) - Fraction((S - len(d2)) * (N - R_r + X), K_c * den)


def averaging_certificate(prob: LPProblem, p: SystemParams, kind: str, X: int = 0) -> tuple:
    """Dual vector built by symmetric averaging, one weight per constraint.

    Covering rows get a uniform weight over a symmetric family of sets; the
    caps on constrained servers absorb the excess.  Returns (weights, value).
    """
    avail = prob.servers
    m = len(avail)
    cons = [n for n in avail if n <= p.S]
    unc = [k for k, n in enumerate(avail) if n > p.S]
    ac = len(cons)
    regime2 = p.S < p.K_c and (
        (kind == "read" and p.N - m > p.N - omega(p) - p.K_c)
        or (kind == "update" and (p.N - m) + X > p.R_r - p.K_c)
    )
    weights = []
    if kind == "read":
        om = omega(p)
        if regime2:
            u = len(unc)
            w = Fraction(1, comb(u - 1, om))
            excess = Fraction(u, u - om) - 1
        else:
            w = Fraction(1, comb(m - 1, om))
            excess = ZERO
        for coef, sense, rhs in prob.constraints:
            if sense == "<=":
                weights.append(excess)
                continue
            missing = [k for k in range(m) if coef[k] == 0]
            ok = not regime2 or all(k in unc for k in missing)
            weights.append(w if ok else ZERO)
    elif kind == "update":
        k = p.R_r - (p.N - m) - X
        used = set()
        cons_idx = {i for i, n in enumerate(avail) if n <= p.S}
        if regime2:
            kp = k - ac
            u = len(unc)
            w = Fraction(1, comb(u - 1, kp - 1))
            excess = Fraction(u, kp) - 1
        else:
            w = Fraction(1, comb(m - 1, k - 1))
            excess = ZERO
        for coef, sense, rhs in prob.constraints:
            if sense == "<=":
                weights.append(excess)
                continue
            tset = frozenset(i for i in range(m) if coef[i] != 0)
            ok = tset not in used and (not regime2 or cons_idx <= tset)
            if ok:
                used.add(tset)
            weights.append(w if ok else ZERO)
    else:
        raise ValueError(f"unknown certificate kind {kind!r}")
    value = sum((wt * (rhs if s == ">=" else -rhs) for wt, (_, s, rhs) in zip(weights, prob.constraints)), ZERO)
    return tuple(weights), value


def check_dual_feasible(prob: LPProblem, weights) -> bool:
    """Weights are a feasible point of the LP dual (so their value is a lower bound)."""
    if len(weights) != len(prob.constraints) or any(w < 0 for w in weights):
        return False
    cost = prob.cost
    for k in range(prob.nvars):
        load = ZERO
        for wt, (coef, sense, _) in zip(weights, prob.constraints):
            if wt:
                load += wt * (coef[k] if sense == ">=" else -coef[k])
        if load > cost[k]:
            return False
    return True


def build_symmetric_lp(p: SystemParams, dropouts, kind: str, X: int = 0) -> LPProblem:
    """Two-variable LP over class-averaged loads (constrained, unconstrained).

    Averaging an optimal point over relabellings within each class keeps it
    feasible at the same cost, so this LP has the same minimum as the full
    one while only listing one covering row per class composition.
    """
    d = normalize_dropouts(p, dropouts)
    d1, d2 = split_dropouts(p, d)
    c, u = p.S - len(d2), p.N - p.S - len(d1)
    if kind == "read":
        if len(d) > p.N - p.R_r:
            raise TooManyDropouts(f"|D|={len(d)} exceeds N-R_r={p.N - p.R_r}")
        keep = c + u - omega(p)
    elif kind == "update":
        need = update_threshold(p, X)
        if p.N - len(d) < need:
            raise ThresholdViolated(need, p.N - len(d))
        keep = p.R_r - len(d) - X
    else:
        raise ValueError(f"unknown LP kind {kind!r}")
    names = tuple(n for n, k in (("constrained", c), ("unconstrained", u)) if k > 0)
    weight = {"constrained": c, "unconstrained": u}
    rows = []
    for j in range(max(0, keep - u), min(c, keep) + 1):
        cnt = {"constrained": j, "unconstrained": keep - j}
        rows.append((tuple(Fraction(cnt[n]) for n in names), ">=", ONE))
    if c > 0:
        rows.append((tuple(ONE if n == "constrained" else ZERO for n in names), "<=", Fraction(1, p.K_c)))
    return LPProblem(names, tuple(rows), tuple(Fraction(weight[n]) for n in names))


def symmetric_lp_bound(p: SystemParams, dropouts, kind: str, X: int = 0) -> Fraction:
    return lp_min(build_symmetric_lp(p, dropouts, kind, X))
