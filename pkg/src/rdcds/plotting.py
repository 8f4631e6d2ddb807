"""Matplotlib figures for simulation reports and bound sweeps."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from fractions import Fraction  # noqa: E402

from .field import parse_frac  # noqa: E402


def _f(v) -> float:
    return float(v) if isinstance(v, (int, float, Fraction)) else float(parse_frac(str(v)))


def plot_costs(report, path) -> None:
    """Measured cost against both lower bounds, one group per event."""
    ev = report.events
    xs = list(range(len(ev)))
    fig, ax = plt.subplots(figsize=(max(5, 0.5 * len(ev) + 2), 3.5))
    w = 0.27
    ax.bar([x - w for x in xs], [float(e.measured) for e in ev], w, label="measured")
    ax.bar(xs, [float(e.closed) for e in ev], w, label="closed form")
    ax.bar([x + w for x in xs], [float(e.lp) for e in ev], w, label="LP")
    ax.set_xticks(xs)
    ax.set_xticklabels([f"{e.op[0].upper()}{e.t}\n{{{','.join(map(str, e.dropouts))}}}" for e in ev],
                       fontsize=7)
    p = report.params
    ax.set_title(f"N={p.N}, R_r={p.R_r}, K_c={p.K_c}, S={p.S}")
    ax.set_ylabel("normalized cost")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_bound_sweep(rows, path) -> None:
    """Closed form against LP value for every swept row (diagonal = match)."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for op, marker in (("read", "o"), ("update", "^")):
        pts = [(_f(r["closed"]), _f(r["lp"])) for r in rows if r["op"] == op]
        if pts:
            ax.scatter(*zip(*pts), s=12, marker=marker, label=op, alpha=0.6)
    if rows:
        hi = max(max(_f(r["closed"]), _f(r["lp"])) for r in rows)
        ax.plot([1, hi], [1, hi], "k--", lw=0.8)
    ax.set_xlabel("closed form")
    ax.set_ylabel("LP optimum")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
