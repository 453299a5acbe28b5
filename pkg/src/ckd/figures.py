"""Figure rendering for reports: convergence traces, CMC curves, ablation bars.

Uses the non-interactive Agg backend so rendering works headless.
Figures are a visual companion to the delimited outputs; numeric
artifacts never depend on this module.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_GRID = {"alpha": 0.3, "linewidth": 0.6}


def plot_convergence(trace, path) -> Path:
    """Objective value per iteration from a solver trace."""
    out = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(
        [rec.iteration for rec in trace.records],
        [rec.objective for rec in trace.records],
        marker="o",
        markersize=3,
        linewidth=1.2,
    )
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.set_title("convergence" + (" (converged)" if trace.converged else " (max iters)"))
    ax.grid(True, **_GRID)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_cmc(reports, path) -> Path:
    """CMC curves, one line per retrieval task."""
    out = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for report in reports:
        ms = sorted(report.cmc)
        ax.plot(
            ms,
            [report.cmc[m] for m in ms],
            marker="o",
            markersize=4,
            linewidth=1.2,
            label=report.task,
        )
    ax.set_xlabel("list size m")
    ax.set_ylabel("match rate")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("cumulative match characteristic")
    ax.grid(True, **_GRID)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_ablation(rows, path) -> Path:
    """Grouped MAP bars per method from ablation result rows.

    Each row is a mapping with at least method, map_i2t, map_t2i, and
    status; failed rows are skipped.
    """
    out = Path(path)
    ok = [r for r in rows if r.get("status") == "ok"]
    fig, ax = plt.subplots(figsize=(max(6.0, 1.6 * max(len(ok), 1)), 4.0))
    if ok:
        xs = range(len(ok))
        width = 0.38
        ax.bar(
            [x - width / 2 for x in xs],
            [float(r["map_i2t"]) for r in ok],
            width,
            label="1 -> 2",
        )
        ax.bar(
            [x + width / 2 for x in xs],
            [float(r["map_t2i"]) for r in ok],
            width,
            label="2 -> 1",
        )
        ax.set_xticks(list(xs))
        ax.set_xticklabels([str(r["method"]) for r in ok], rotation=20, ha="right")
        ax.legend()
    else:
        ax.text(0.5, 0.5, "no successful runs", ha="center", va="center")
    ax.set_ylabel("MAP")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("ablation")
    ax.grid(True, axis="y", **_GRID)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
