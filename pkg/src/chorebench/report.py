"""Report rendering: delimited tables plus matplotlib figures."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def write_records(path, rows: list[dict]):
    """Tab-separated table with a header row; floats at 4 decimals."""
    path = Path(path)
    if not rows:
        path.write_text("", encoding="utf-8")
        return
    columns = list(rows[0].keys())

    def fmt(value):
        if isinstance(value, float):
            return f"{value:.4f}"
        return str(value)

    lines = ["\t".join(columns)]
    lines += ["\t".join(fmt(row[c]) for c in columns) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_table(rows: list[dict]) -> str:
    """Aligned plain-text table for terminal output."""
    if not rows:
        return "(no rows)\n"
    columns = list(rows[0].keys())

    def fmt(value):
        if isinstance(value, float):
            return f"{value:.2f}"
        return str(value)

    cells = [columns] + [[fmt(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    out = []
    for row in cells:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"


def render_eval_figure(path, per_task: dict):
    """Bar chart of SR and GC per task."""
    tasks = sorted(per_task)
    sr = [per_task[t]["SR"] * 100 for t in tasks]
    gc = [per_task[t]["GC"] * 100 for t in tasks]
    fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(tasks)), 4))
    xs = range(len(tasks))
    ax.bar([x - 0.2 for x in xs], sr, width=0.4, label="SR")
    ax.bar([x + 0.2 for x in xs], gc, width=0.4, label="GC")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(tasks, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("percent")
    ax.set_ylim(0, 105)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_stats_figures(out_dir, sessions) -> list:
    """Histograms of utterances and Follower actions per session."""
    out_dir = Path(out_dir)
    written = []
    utterances = [len(s.dialogue()) for s in sessions]
    follower = [len(s.follower_env_actions()) for s in sessions]
    for name, values, label in (
        ("utterances_per_session.png", utterances, "utterances per session"),
        ("follower_actions_per_session.png", follower, "Follower actions per session"),
    ):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.hist(values, bins=min(30, max(5, len(set(values)))), color="#4878d0")
        ax.set_xlabel(label)
        ax.set_ylabel("sessions")
        fig.tight_layout()
        path = out_dir / name
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def render_success_figure(path, per_task_rates: dict):
    """Bar chart of episode success rate per task."""
    tasks = sorted(per_task_rates)
    rates = [per_task_rates[t] * 100 for t in tasks]
    fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(tasks)), 4))
    ax.bar(range(len(tasks)), rates, color="#4878d0")
    ax.set_xticks(range(len(tasks)))
    ax.set_xticklabels(tasks, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("success rate (%)")
    ax.set_ylim(0, 105)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
