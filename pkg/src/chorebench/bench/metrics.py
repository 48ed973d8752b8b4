"""Benchmark metrics: SR, GC, and trajectory-length-weighted variants."""

from __future__ import annotations

from statistics import fmean

from .inference import EvalOutcome


def trajectory_length_weighted(m: float, reference_len: int, predicted_len: int) -> float:
    """TLW-m = m * |reference| / max(|reference|, |predicted|)."""
    return m * reference_len / max(reference_len, predicted_len)


def score(outcome: EvalOutcome, instance) -> dict:
    """Per-instance metrics.

    Success requires every expected state change to be present in the
    achieved set; extra achieved changes never penalize. Goal-condition
    success is the fraction of expected changes achieved.
    """
    expected = instance.expected_deltas
    if not expected:
        raise ValueError(f"{instance.instance_id}: empty expected delta set")
    achieved = outcome.achieved_deltas
    sr = 1.0 if expected <= achieved else 0.0
    gc = len(expected & achieved) / len(expected)
    ref_len = len(instance.reference_actions)
    pred_len = len(outcome.predicted_actions)
    return {
        "SR": sr,
        "GC": gc,
        "TLW_SR": trajectory_length_weighted(sr, ref_len, pred_len),
        "TLW_GC": trajectory_length_weighted(gc, ref_len, pred_len),
    }


def aggregate(rows: list[dict]) -> dict:
    """Macro (unweighted) means over per-instance metric rows."""
    if not rows:
        return {"SR": 0.0, "GC": 0.0, "TLW_SR": 0.0, "TLW_GC": 0.0, "instances": 0}
    out = {key: fmean(r[key] for r in rows) for key in ("SR", "GC", "TLW_SR", "TLW_GC")}
    out["instances"] = len(rows)
    return out
