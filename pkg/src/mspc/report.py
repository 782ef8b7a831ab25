"""Figure rendering for study outputs.

Reads the CSV files emitted by `harness.write_report` and renders
matplotlib figures next to them. Kept separate from the harness so the
core studies have no plotting dependency at run time.
"""
from __future__ import annotations

import csv
import json
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_COLORS = {"sampling_oracle": "tab:green", "proposed": "tab:blue",
           "ellipsoidal": "tab:orange", "nominal": "tab:gray"}


def _read_csv(path: pathlib.Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_reach(out: pathlib.Path) -> pathlib.Path | None:
    """Directional reachable-set bounds per horizon, one band per method."""
    src = out / "reach.csv"
    if not src.exists():
        return None
    rows = [r for r in _read_csv(src) if r["lower"] != ""]
    methods = sorted({r["method"] for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4))
    for m in methods:
        ks = [int(r["k"]) for r in rows if r["method"] == m]
        lo = [float(r["lower"]) for r in rows if r["method"] == m]
        hi = [float(r["upper"]) for r in rows if r["method"] == m]
        c = _COLORS.get(m)
        ax.fill_between(ks, lo, hi, alpha=0.25, color=c, label=m)
        ax.plot(ks, lo, color=c, lw=0.8)
        ax.plot(ks, hi, color=c, lw=0.8)
    ax.set_xlabel("horizon step k")
    ax.set_ylabel("last-mass position bound")
    ax.set_title("Directional probabilistic reachable-set bounds")
    ax.legend()
    fig.tight_layout()
    dst = out / "reach.png"
    fig.savefig(dst, dpi=150)
    plt.close(fig)
    return dst


def plot_feasibility(out: pathlib.Path) -> pathlib.Path | None:
    """Feasible percentage per method."""
    src = out / "feasibility.csv"
    if not src.exists():
        return None
    rows = [r for r in _read_csv(src) if r.get("feasible_pct")]
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(5, 4))
    names = [r["method"] for r in rows]
    pct = [float(r["feasible_pct"]) for r in rows]
    ax.bar(names, pct, color=[_COLORS.get(n, "tab:purple") for n in names])
    for x, v in enumerate(pct):
        ax.text(x, v + 1, f"{v:.1f}%", ha="center")
    ax.set_ylim(0, 110)
    ax.set_ylabel("feasible trials (%)")
    ax.set_title("Chance-constrained problem feasibility")
    fig.tight_layout()
    dst = out / "feasibility.png"
    fig.savefig(dst, dpi=150)
    plt.close(fig)
    return dst


def plot_violation(out: pathlib.Path) -> pathlib.Path | None:
    """Per-step max violation rate per method, with the 1-p target line."""
    src = out / "summary.json"
    if not src.exists():
        return None
    with open(src) as fh:
        summary = json.load(fh)
    viol = summary.get("violation", {})
    p = summary.get("config", {}).get("p", 0.9)
    fig, ax = plt.subplots(figsize=(7, 4))
    drew = False
    for m, s in viol.items():
        series = s.get("per_step_max_pct") if isinstance(s, dict) else None
        if not series:
            continue
        ax.plot(range(1, len(series) + 1), series, marker="o", ms=3,
                label=m, color=_COLORS.get(m.split("_")[0]))
        drew = True
    if not drew:
        plt.close(fig)
        return None
    ax.axhline(100 * (1 - p), ls="--", color="k", lw=1,
               label=f"target 1-p = {100 * (1 - p):.0f}%")
    ax.set_xlabel("horizon step k")
    ax.set_ylabel("max violation rate (%)")
    ax.set_title("Empirical chance-constraint violation")
    ax.legend()
    fig.tight_layout()
    dst = out / "violation.png"
    fig.savefig(dst, dpi=150)
    plt.close(fig)
    return dst


def render_figures(out_dir) -> list[pathlib.Path]:
    """Render all available figures for a report directory."""
    out = pathlib.Path(out_dir)
    made = [plot_reach(out), plot_feasibility(out), plot_violation(out)]
    return [m for m in made if m is not None]
