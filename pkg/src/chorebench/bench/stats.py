"""Per-task session statistics in the benchmark-table schema."""

from __future__ import annotations

from statistics import fmean, pstdev

from ..session import Session


def _mean_sd(values) -> tuple:
    values = list(values)
    if not values:
        return (0.0, 0.0)
    return (fmean(values), pstdev(values))


def session_stats(sessions: list[Session]) -> list[dict]:
    """One row per task plus an Overall row: session count, utterances per
    session, Follower actions per session, all actions per session
    (mean and population standard deviation)."""
    by_task: dict[str, list[Session]] = {}
    for session in sessions:
        by_task.setdefault(session.task_name, []).append(session)

    def row(name, group):
        utterances = [len(s.dialogue()) for s in group]
        follower = [len(s.follower_env_actions()) for s in group]
        everything = [len(s.actions) for s in group]
        um, us = _mean_sd(utterances)
        fm, fs = _mean_sd(follower)
        am, asd = _mean_sd(everything)
        return {
            "task_name": name,
            "sessions": len(group),
            "utterances_mean": um,
            "utterances_sd": us,
            "follower_actions_mean": fm,
            "follower_actions_sd": fs,
            "all_actions_mean": am,
            "all_actions_sd": asd,
        }

    rows = [row(name, group) for name, group in sorted(by_task.items())]
    rows.append(row("Overall", sessions))
    return rows
