from .edh import (
    EdhInstance,
    TaskRelevanceFilter,
    TfdInstance,
    extract_tfd,
    filter_task_relevant,
    segment_edh,
)
from .inference import (
    EvalOutcome,
    FollowerAgent,
    InferenceLimits,
    OracleReplayAgent,
    ScriptedAgent,
    run_inference,
)
from .metrics import aggregate, score, trajectory_length_weighted
from .splits import SplitSpec, assign_floorplans, make_splits
from .stats import session_stats

__all__ = [
    "EdhInstance",
    "TfdInstance",
    "TaskRelevanceFilter",
    "segment_edh",
    "extract_tfd",
    "filter_task_relevant",
    "EvalOutcome",
    "FollowerAgent",
    "InferenceLimits",
    "OracleReplayAgent",
    "ScriptedAgent",
    "run_inference",
    "score",
    "aggregate",
    "trajectory_length_weighted",
    "SplitSpec",
    "assign_floorplans",
    "make_splits",
    "session_stats",
]
