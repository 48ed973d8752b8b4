"""Seen/unseen split construction over sessions and floorplans."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..errors import ChoreBenchError

FOLDS = ("train", "val_seen", "val_unseen", "test_seen", "test_unseen")

# Matches the published corpus shape: ~49% of sessions in train, seen folds
# ~6% each, unseen folds ~20% each.
DEFAULT_UNSEEN_FRACTION = 0.39
DEFAULT_SEEN_PROPORTIONS = (0.8, 0.1, 0.1)   # train / val_seen / test_seen
DEFAULT_UNSEEN_PROPORTIONS = (0.5, 0.5)      # val_unseen / test_unseen


@dataclass
class SplitSpec:
    folds: dict                       # fold name -> set of session ids
    floorplan_pools: dict             # floorplan id -> "train" | "unseen"

    def validate(self, session_plans: dict):
        seen_ids: set = set()
        for name in FOLDS:
            ids = self.folds.get(name, set())
            overlap = seen_ids & ids
            if overlap:
                raise ChoreBenchError(f"fold overlap on {sorted(overlap)[:3]}")
            seen_ids |= ids
        train_plans = {
            session_plans[sid] for sid in self.folds["train"]
        } | {
            session_plans[sid] for sid in self.folds["val_seen"]
        } | {
            session_plans[sid] for sid in self.folds["test_seen"]
        }
        for name in ("val_unseen", "test_unseen"):
            for sid in self.folds[name]:
                if session_plans[sid] in train_plans:
                    raise ChoreBenchError(
                        f"{sid}: unseen fold reuses training floorplan {session_plans[sid]}"
                    )

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "folds": {name: sorted(ids) for name, ids in self.folds.items()},
            "floorplan_pools": dict(sorted(self.floorplan_pools.items())),
        }


def assign_floorplans(plan_ids, seed: int, unseen_fraction: float = DEFAULT_UNSEEN_FRACTION) -> dict:
    """Random train/unseen partition of floorplans."""
    plan_ids = sorted(plan_ids)
    if len(plan_ids) < 2:
        raise ChoreBenchError("need at least two floorplans to build unseen folds")
    rng = random.Random(f"splits|{seed}")
    shuffled = plan_ids[:]
    rng.shuffle(shuffled)
    n_unseen = max(1, round(len(shuffled) * unseen_fraction))
    n_unseen = min(n_unseen, len(shuffled) - 1)
    unseen = set(shuffled[:n_unseen])
    return {pid: ("unseen" if pid in unseen else "train") for pid in plan_ids}


def make_splits(
    session_plans: dict,
    assignment: dict,
    seed: int = 0,
    seen_proportions=DEFAULT_SEEN_PROPORTIONS,
    unseen_proportions=DEFAULT_UNSEEN_PROPORTIONS,
) -> SplitSpec:
    """Fold sessions by their floorplan's pool.

    session_plans maps session id -> floorplan id; assignment maps
    floorplan id -> "train" | "unseen" (every session's plan must appear).
    """
    for sid, pid in session_plans.items():
        if pid not in assignment:
            raise ChoreBenchError(f"{sid}: floorplan {pid} missing from assignment")
        if assignment[pid] not in ("train", "unseen"):
            raise ChoreBenchError(f"floorplan {pid}: pool must be train or unseen")
    train_pool = sorted(
        sid for sid, pid in session_plans.items() if assignment[pid] == "train"
    )
    unseen_pool = sorted(
        sid for sid, pid in session_plans.items() if assignment[pid] == "unseen"
    )
    if not unseen_pool:
        raise ChoreBenchError("no sessions on unseen floorplans; cannot build unseen folds")
    rng = random.Random(f"splits|{seed}")
    rng.shuffle(train_pool)
    rng.shuffle(unseen_pool)
    p_train, p_val_seen, _ = seen_proportions
    a = round(len(train_pool) * p_train)
    b = a + round(len(train_pool) * p_val_seen)
    c = round(len(unseen_pool) * unseen_proportions[0])
    folds = {
        "train": set(train_pool[:a]),
        "val_seen": set(train_pool[a:b]),
        "test_seen": set(train_pool[b:]),
        "val_unseen": set(unseen_pool[:c]),
        "test_unseen": set(unseen_pool[c:]),
    }
    spec = SplitSpec(folds=folds, floorplan_pools=dict(assignment))
    spec.validate(session_plans)
    return spec
