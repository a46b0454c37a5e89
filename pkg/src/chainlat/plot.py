"""Gantt charts of schedules, written to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .oracle import simulate  # noqa: E402


def plot_schedule(sched, system, path, title="", highlight=(), marks=()):
    """One row per task, grouped by core; ``highlight`` is a set of (task, j)."""
    rows = sorted(system.tasks, key=lambda t: (t.core, -t.prio))
    y = {t.id: k for k, t in enumerate(rows)}
    cmap = plt.get_cmap("tab10")
    fig, ax = plt.subplots(figsize=(10, 0.45 * len(rows) + 1.5))
    for core, pieces in sched.busy.items():
        for start, end, tid, j in pieces:
            hot = (tid, j) in highlight
            ax.broken_barh([(start, end - start)], (y[tid] - 0.35, 0.7),
                           facecolors=cmap(core % 10), edgecolor="black" if hot else "none",
                           linewidth=1.2, alpha=1.0 if hot else 0.55)
    for job in sched.jobs.values():
        if job.task in y:
            ax.plot([job.alpha], [y[job.task] + 0.42], marker="v", ms=3, color="0.3", ls="none")
    for x in marks:
        ax.axvline(x, color="crimson", lw=0.8, ls="--")
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels([f"{t.label} (c{t.core})" for t in rows])
    ax.invert_yaxis()
    ax.set_xlabel("time [us]")
    if title:
        ax.set_title(title)
    ax.grid(axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_witness(res, path):
    """Replay the worst-case witness and draw it with the chain instances outlined."""
    sub = res.system.system.restrict(res.relevant)
    sched = simulate(sub, res.witness_scenario(), res.horizon.T, check_deadlines=False)
    rows = res.chain_trace()
    hot = {(r["task"], r["n"]) for r in rows}
    marks = [rows[0]["alpha"], rows[-1]["x"]] if rows else []
    return plot_schedule(sched, sub, path, title=f"{res.mode.value}: latency {res.latency} us",
                         highlight=hot, marks=marks)
