"""Scenario runner: a timeline of reads and updates against one cluster."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .bounds import closed_read_bound, closed_update_bound, read_lp_bound, update_lp_bound
from .errors import ConfigError, InvalidParams, RDCDSError, ScenarioInvalid
from .field import frac_str
from .params import SystemParams, derive, normalize_dropouts, omega, update_threshold
from .read import decode, execute_read, plan_read, read_message
from .security import check_recoverability
from .storage import init_cluster
from .update import apply_update, encode_increment, plan_update

SEED_ENV = "RDCDS_SEED"


@dataclass
class Event:
    op: str
    dropouts: tuple = ()
    X: int = 0
    increment: object = "random"


@dataclass
class Scenario:
    params: SystemParams
    seed: int = 0
    initial_message: object = "random"
    timeline: list = dc_field(default_factory=list)


def _int(v, what, k=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioInvalid(k, f"{what} must be an integer, got {v!r}")
    return v


def scenario_from_dict(raw: dict, seed: int | None = None) -> Scenario:
    """Build and eagerly validate a scenario; every event is checked first."""
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object")
    pr = raw.get("params")
    if not isinstance(pr, dict):
        raise ConfigError("scenario needs a 'params' object with N, R_r, K_c, S")
    try:
        params = SystemParams(int(pr["N"]), int(pr["R_r"]), int(pr["K_c"]), int(pr["S"]),
                              None if pr.get("q") is None else int(pr["q"]))
    except KeyError as exc:
        raise ConfigError(f"params missing {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ScenarioInvalid(None, str(exc)) from None
    if params.S >= params.K_c:
        raise ScenarioInvalid(None, "simulation needs S < K_c")
    try:
        d = derive(params)
    except InvalidParams as exc:
        raise ScenarioInvalid(None, str(exc)) from None

    if seed is None:
        env = os.environ.get(SEED_ENV)
        seed = int(env) if env not in (None, "") else raw.get("seed", 0)
    seed = _int(seed, "seed")

    init = raw.get("initialMessage", raw.get("initial_message", "random"))
    if init != "random":
        if not isinstance(init, list) or len(init) != d.L:
            raise ScenarioInvalid(None, f"initialMessage must be 'random' or {d.L} symbols")
        init = [int(v) % d.q for v in init]

    events = []
    for k, ev in enumerate(raw.get("timeline", [])):
        if not isinstance(ev, dict):
            raise ScenarioInvalid(k, "event must be an object")
        op = ev.get("op")
        if op not in ("read", "update"):
            raise ScenarioInvalid(k, f"op must be 'read' or 'update', got {op!r}")
        try:
            drop = normalize_dropouts(params, ev.get("dropouts", []))
        except (InvalidParams, TypeError, ValueError) as exc:
            raise ScenarioInvalid(k, str(exc)) from None
        if op == "read":
            if len(drop) > params.N - params.R_r:
                raise ScenarioInvalid(k, f"read with {len(drop)} dropouts exceeds N-R_r={params.N - params.R_r}")
            events.append(Event("read", drop))
            continue
        X = _int(ev.get("security", ev.get("X", 0)), "security", k)
        if not 0 <= X < params.R_r:
            raise ScenarioInvalid(k, f"security must satisfy 0 <= X < R_r={params.R_r}")
        need = update_threshold(params, X)
        if params.N - len(drop) < need:
            raise ScenarioInvalid(k, f"update needs at least R_u={need} available servers, got {params.N - len(drop)}")
        inc = ev.get("increment", "random")
        if inc != "random":
            if not isinstance(inc, list) or len(inc) != d.L:
                raise ScenarioInvalid(k, f"increment must be 'random' or {d.L} symbols")
            inc = [int(v) % d.q for v in inc]
        events.append(Event("update", drop, X, inc))
    return Scenario(params, seed, init, events)


def load_scenario(path, seed: int | None = None) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return scenario_from_dict(raw, seed)


@dataclass
class EventRecord:
    t: int
    op: str
    dropouts: tuple
    X: int | None
    case: str
    measured: Fraction
    closed: Fraction
    lp: Fraction
    clamped: bool
    decode_ok: bool
    dropout_untouched: bool
    transcript: dict
    plan: object = dc_field(default=None, repr=False, compare=False)
    raw: object = dc_field(default=None, repr=False, compare=False)

    @property
    def cost_match(self) -> bool:
        return self.measured == self.closed == self.lp

    @property
    def ok(self) -> bool:
        cost_ok = self.cost_match if not self.clamped else self.measured >= self.lp
        return self.decode_ok and self.dropout_untouched and cost_ok

    def to_json(self) -> dict:
        return {
            "t": self.t, "op": self.op, "dropouts": list(self.dropouts), "X": self.X,
            "case": self.case, "measuredCost": frac_str(self.measured),
            "closedFormBound": frac_str(self.closed), "lpBound": frac_str(self.lp),
            "costMatch": self.cost_match, "clampFlag": self.clamped,
            "gap": frac_str(self.measured - self.lp), "decodeOk": self.decode_ok,
            "dropoutUntouched": self.dropout_untouched, "transcript": self.transcript,
        }


@dataclass
class RunReport:
    params: SystemParams
    seed: int
    events: list
    final: dict

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.events) and self.final.get("recoverable", False)

    def first_failure(self) -> str | None:
        for e in self.events:
            if not e.decode_ok:
                return f"event t={e.t} ({e.op}): decoded message differs"
            if not e.dropout_untouched:
                return f"event t={e.t} ({e.op}): dropout storage changed"
            if not e.ok:
                return f"event t={e.t} ({e.op}): cost {e.measured} vs closed {e.closed} vs LP {e.lp}"
        if not self.final.get("recoverable", False):
            return f"final recoverability: {self.final.get('detail')}"
        return None

    def to_json(self) -> dict:
        return {
            "params": self.params.to_dict() | {"q": derive(self.params).q},
            "seed": self.seed,
            "events": [e.to_json() for e in self.events],
            "final": self.final,
            "ok": self.ok,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def csv_rows(self) -> list:
        p = self.params
        return [
            {"N": p.N, "R_r": p.R_r, "K_c": p.K_c, "S": p.S, "op": e.op,
             "dropouts": ";".join(map(str, e.dropouts)), "X": "" if e.X is None else e.X,
             "case": e.case, "measured": frac_str(e.measured), "closed": frac_str(e.closed),
             "lp": frac_str(e.lp), "match": e.cost_match, "clamped": e.clamped}
            for e in self.events
        ]

    def write_csv(self, path) -> None:
        cols = ["N", "R_r", "K_c", "S", "op", "dropouts", "X", "case", "measured", "closed", "lp", "match", "clamped"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            w.writerows(self.csv_rows())


def event_rng(seed: int, k: int) -> np.random.Generator:
    """Independent stream for event k; stream 0 belongs to initialization."""
    return np.random.default_rng([seed, k + 1])


def sample_dropouts(params: SystemParams, ev: Event, p: float, rng: np.random.Generator) -> tuple:
    """Drop each server with probability p, trimmed to what the op tolerates."""
    picked = [n for n in range(1, params.N + 1) if rng.random() < p]
    cap = params.N - params.R_r if ev.op == "read" else omega(params) - ev.X
    return tuple(sorted(picked[:max(0, cap)]))


def _spot_read_dropouts(params: SystemParams, drop: tuple) -> tuple:
    return drop[:params.N - params.R_r]


def run_scenario(s: Scenario, random_dropouts: float | None = None, final_check: bool = True) -> RunReport:
    p = s.params
    rng0 = np.random.default_rng([s.seed, 0])
    msg = None if s.initial_message == "random" else s.initial_message
    cluster = init_cluster(p, msg, rng0)
    d = cluster.derived
    records = []
    for k, ev in enumerate(s.timeline):
        rng = event_rng(s.seed, k)
        if random_dropouts is not None:
            ev = Event(ev.op, sample_dropouts(p, ev, random_dropouts, rng), ev.X, ev.increment)
        before = {n: (cluster.server(n).s1.copy(),
                      None if cluster.server(n).s2 is None else cluster.server(n).s2.copy())
                  for n in range(1, p.N + 1)}
        t = cluster.t
        if ev.op == "read":
            plan = plan_read(p, ev.dropouts)
            tr = execute_read(cluster, plan)
            try:
                got = decode(plan, tr, cluster.code)
                ok = bool(np.array_equal(got, cluster.reference_message))
            except (RDCDSError, ArithmeticError):
                ok = False
            watch = range(1, p.N + 1)
            measured, closed, lp = tr.cost, closed_read_bound(p, ev.dropouts), read_lp_bound(p, ev.dropouts)
            rec = EventRecord(t, "read", ev.dropouts, None, str(plan.case), measured, closed, lp,
                              False, ok, True, tr.to_json())
        else:
            if ev.increment == "random":
                delta = cluster.field.random(rng, (d.L,))
            else:
                delta = np.asarray(ev.increment, dtype=np.int64)
            plan = plan_update(p, ev.dropouts, ev.X)
            tr = encode_increment(plan, delta, rng)
            apply_update(cluster, tr)
            try:
                got, _ = read_message(cluster, _spot_read_dropouts(p, ev.dropouts))
                ok = bool(np.array_equal(got, cluster.reference_message))
            except (RDCDSError, ArithmeticError):
                ok = False
            watch = ev.dropouts
            measured = tr.cost
            closed = closed_update_bound(p, ev.dropouts, ev.X)
            lp = update_lp_bound(p, ev.dropouts, ev.X)
            rec = EventRecord(t, "update", ev.dropouts, ev.X, str(plan.case), measured, closed, lp,
                              plan.clamped, ok, True, tr.to_json())
        rec.plan, rec.raw = plan, tr
        rec.dropout_untouched = all(
            np.array_equal(before[n][0], cluster.server(n).s1)
            and (before[n][1] is None or np.array_equal(before[n][1], cluster.server(n).s2))
            for n in watch
        )
        records.append(rec)
    final = {"t": cluster.t}
    if final_check:
        res = check_recoverability(cluster)
        final |= {"recoverable": res.ok, "detail": res.detail}
    else:
        final |= {"recoverable": True, "detail": "skipped"}
    report = RunReport(p, s.seed, records, final)
    report.cluster = cluster
    return report


def random_scenario(params: SystemParams, n_events: int, seed: int) -> Scenario:
    """A reproducible mix of reads and updates with feasible dropout sets."""
    rng = np.random.default_rng([seed, 1 << 20])
    om = omega(params)
    events = []
    for _ in range(n_events):
        if rng.random() < 0.5:
            k = int(rng.integers(0, params.N - params.R_r + 1))
            drop = sorted(rng.choice(np.arange(1, params.N + 1), k, replace=False).tolist())
            events.append(Event("read", tuple(drop)))
        else:
            X = int(rng.integers(0, min(om, params.R_r - 1) + 1))
            k = int(rng.integers(0, om - X + 1))
            drop = sorted(rng.choice(np.arange(1, params.N + 1), k, replace=False).tolist())
            events.append(Event("update", tuple(drop), X, "random"))
    return Scenario(params, seed, "random", events)


def demo_scenario(seed: int = 0) -> Scenario:
    """N=7, R_r=5, K_c=6, S=2: read, update, read."""
    p = SystemParams(7, 5, 6, 2, 17)
    return Scenario(p, seed, "random", [
        Event("read", (3,)),
        Event("update", (1,), 1, "random"),
        Event("read", ()),
    ])


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "params": s.params.to_dict(),
        "seed": s.seed,
        "initialMessage": s.initial_message,
        "timeline": [
            {"op": e.op, "dropouts": list(e.dropouts)}
            | ({"security": e.X, "increment": e.increment} if e.op == "update" else {})
            for e in s.timeline
        ],
    }
