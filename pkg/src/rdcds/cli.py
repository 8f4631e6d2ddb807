"""Command line entry point: ``rdcds {params,demo,simulate,bounds,verify}``.

Exit codes: 0 success, 1 a check failed, 2 bad configuration or arguments.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from .bounds import (closed_read_bound, closed_update_bound, read_lp_bound,
                     symmetric_lp_bound, update_lp_bound)
from .errors import ConfigError, InvalidParams, RDCDSError, ScenarioInvalid
from .field import frac_str
from .params import SystemParams, derive, omega, update_threshold
from .security import check_all_subsets, check_staircase, increment_witness
from .sim import demo_scenario, load_scenario, run_scenario

FULL_LP_MAX_N = 12
SWEEP_COLUMNS = ["N", "R_r", "K_c", "S", "op", "dropouts", "X", "closed", "lp", "match"]


def _params(args) -> SystemParams:
    return SystemParams(args.N, args.R_r, args.K_c, args.S, args.q)


def cmd_params(args) -> int:
    p = _params(args)
    if p.S >= p.K_c:
        print(f"Ω={omega(p)}")
        print("storage scheme: unavailable (S >= K_c); read bound "
              f"{frac_str(closed_read_bound(p, ()))} with no dropouts")
        return 0
    d = derive(p)
    s = d.summary()
    print(f"L={d.L}, Ω={d.omega}, P={d.P}")
    for k, v in s.items():
        print(f"{k}={v}")
    for X in range(min(d.omega, p.R_r - 1) + 1):
        print(f"update threshold (X={X})={update_threshold(p, X)}")
    return 0


def cmd_demo(args) -> int:
    rep = run_scenario(demo_scenario(args.seed))
    p = rep.params
    rd, up, rd2 = rep.events
    print(f"params N={p.N} R_r={p.R_r} K_c={p.K_c} S={p.S} q={derive(p).q} L={derive(p).L}")
    print(f"read cost {frac_str(rd.measured)} (dropouts {list(rd.dropouts)}, {rd.case})")
    print(f"threshold {update_threshold(p, up.X)}")
    print(f"update cost {frac_str(up.measured)} (dropouts {list(up.dropouts)}, X={up.X}, {up.case})")
    print(f"read cost {frac_str(rd2.measured)} (no dropouts)")
    print(f"final read decodes W+Δ: {'ok' if rd2.decode_ok else 'FAILED'}")
    print(f"bounds match: {'ok' if all(e.cost_match for e in rep.events) else 'FAILED'}")
    return 0 if rep.ok else 1


def cmd_simulate(args) -> int:
    scen = load_scenario(args.config, args.seed)
    rep = run_scenario(scen, args.random_dropouts)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(rep.dumps())
    rep.write_csv(out / "costs.csv")
    if not args.no_plot:
        from .plotting import plot_costs
        plot_costs(rep, out / "costs.png")
    for e in rep.events:
        print(f"t={e.t} {e.op:<6} D={list(e.dropouts)} case={e.case} cost={frac_str(e.measured)} "
              f"closed={frac_str(e.closed)} lp={frac_str(e.lp)} "
              f"{'ok' if e.ok else 'FAIL'}")
    fail = rep.first_failure()
    if fail:
        print(f"FAILED: {fail}", file=sys.stderr)
        return 1
    print(f"all {len(rep.events)} events passed; wrote {out}")
    return 0


def _parse_range(spec: str, name: str) -> range:
    key, _, val = spec.partition("=")
    if key != name or not val:
        raise ConfigError(f"expected {name}=a:b, got {spec!r}")
    lo, _, hi = val.partition(":")
    try:
        lo_i = int(lo)
        hi_i = int(hi) if hi else lo_i
    except ValueError:
        raise ConfigError(f"bad range {spec!r}") from None
    return range(lo_i, hi_i + 1)


def sweep_rows(ranges, include_unconstrained: bool = True):
    """Closed form and LP for every tuple and dropout class in the ranges."""
    rows = []
    for N, R_r, K_c, S in itertools.product(*ranges):
        try:
            p = SystemParams(N, R_r, K_c, S)
        except InvalidParams:
            continue
        if K_c > N or (p.S >= p.K_c and not include_unconstrained):
            continue
        for n2 in range(S + 1):
            for n1 in range(N - S + 1):
                drop = tuple(range(1, n2 + 1)) + tuple(range(N - n1 + 1, N + 1))
                if n1 + n2 <= N - R_r:
                    lp = read_lp_bound(p, drop) if N <= FULL_LP_MAX_N else symmetric_lp_bound(p, drop, "read")
                    rows.append(_row(p, "read", drop, "", closed_read_bound(p, drop), lp))
                for X in range(R_r):
                    if N - n1 - n2 < update_threshold(p, X):
                        continue
                    lp = (update_lp_bound(p, drop, X) if N <= FULL_LP_MAX_N
                          else symmetric_lp_bound(p, drop, "update", X))
                    rows.append(_row(p, "update", drop, X, closed_update_bound(p, drop, X), lp))
    return rows


def _row(p, op, drop, X, closed, lp):
    return {"N": p.N, "R_r": p.R_r, "K_c": p.K_c, "S": p.S, "op": op,
            "dropouts": ";".join(map(str, drop)), "X": X,
            "closed": frac_str(closed), "lp": frac_str(lp), "match": closed == lp}


def cmd_bounds(args) -> int:
    if not args.sweep or len(args.sweep) != 4:
        raise ConfigError("--sweep needs N=a:b R_r=a:b K_c=a:b S=a:b")
    ranges = [_parse_range(s, n) for s, n in zip(args.sweep, ("N", "R_r", "K_c", "S"))]
    rows = sweep_rows(ranges)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    if args.plot:
        from .plotting import plot_bound_sweep
        plot_bound_sweep(rows, args.plot)
    bad = [r for r in rows if not r["match"]]
    print(f"{len(rows)} rows, {len(bad)} mismatches", file=sys.stderr)
    return 1 if bad else 0


def verify_scenario(scen, witness_samples: int = 50) -> dict:
    """Run a scenario and every correctness and security check on it."""
    rep = run_scenario(scen)
    checks = passes = 0
    first = None

    def record(ok: bool, what: str):
        nonlocal checks, passes, first
        checks += 1
        passes += bool(ok)
        if not ok and first is None:
            first = what

    p = rep.params
    rng = np.random.default_rng([scen.seed, 1 << 21])
    for e in rep.events:
        tag = f"t={e.t} {e.op} D={list(e.dropouts)}"
        record(e.decode_ok, f"{tag}: decode")
        record(e.dropout_untouched, f"{tag}: dropout storage changed")
        record(e.cost_match or (e.clamped and e.measured >= e.lp), f"{tag}: cost {e.measured} vs bound {e.lp}")
        if e.op != "update":
            continue
        plan, tr = e.plan, e.raw
        if plan.X > 0:
            res = check_all_subsets(plan)
            record(res.ok, f"{tag}: X-security {res.detail}")
            neg = check_all_subsets(plan, drop_noise=True)
            record(not neg.ok, f"{tag}: negative control (no noise) was not detected")
        pairs = [(r, x) for r in itertools.combinations(plan.available, p.R_r - len(plan.dropouts))
                 for x in itertools.combinations(r, plan.X)]
        if len(pairs) > witness_samples:
            idx = rng.choice(len(pairs), witness_samples, replace=False)
            pairs = [pairs[i] for i in sorted(idx)]
        for r, x in pairs:
            res = increment_witness(plan, tr, r, x)
            record(res.ok, f"{tag}: witness R={list(r)} X={list(x)}: {res.detail}")
    res = check_staircase(rep.cluster.oracle)
    record(res.ok, f"staircase: {res.detail}")
    record(rep.final.get("recoverable", False), f"recoverability: {rep.final.get('detail')}")
    return {"checks_run": checks, "passes": passes, "first_counterexample": first}


def cmd_verify(args) -> int:
    scen = load_scenario(args.config, args.seed)
    out = verify_scenario(scen, args.witness_samples)
    print(json.dumps(out, indent=2))
    return 0 if out["first_counterexample"] is None else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rdcds", description="Dropout-tolerant coded storage simulator")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("params", help="print derived parameters")
    for n in ("N", "R_r", "K_c", "S"):
        sp.add_argument(n, type=int)
    sp.add_argument("--q", type=int, default=None)
    sp.set_defaults(fn=cmd_params)

    sp = sub.add_parser("demo", help="run the N=7, R_r=5, K_c=6, S=2 walkthrough")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_demo)

    sp = sub.add_parser("simulate", help="run a scenario file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default="out")
    sp.add_argument("--random-dropouts", type=float, default=None, metavar="P")
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("bounds", help="compare closed forms with LP optima")
    sp.add_argument("--sweep", nargs=4, metavar="NAME=a:b")
    sp.add_argument("--out", default=None)
    sp.add_argument("--plot", default=None)
    sp.set_defaults(fn=cmd_bounds)

    sp = sub.add_parser("verify", help="run all correctness and security checks on a scenario")
    sp.add_argument("--config", required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--witness-samples", type=int, default=50)
    sp.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "random_dropouts", None) is not None and not 0 <= args.random_dropouts <= 1:
        print("error: --random-dropouts must lie in [0, 1]", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (ConfigError, ScenarioInvalid, InvalidParams) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RDCDSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
