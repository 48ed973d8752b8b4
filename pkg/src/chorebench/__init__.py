"""chorebench: household-task benchmark engine.

A task-definition-language interpreter with completion checking and Progress
Check generation, a deterministic grid-world household simulator with a
two-agent action space, rule-based Commander/Follower agents, and the
EDH/TfD/TATC benchmark construction and metric suite.
"""

__version__ = "0.1.0"

from .checker import ProgressReport, cascade_determiner, check_task, find_candidates
from .hierarchy import ClassHierarchy
from .library import TaskLibrary, load_library, shipped_library
from .tdl import (
    Determiner,
    GroundTask,
    TaskDefinition,
    parse_task_definition,
    render_desc,
    serialize_task_definition,
    substitute_params,
)
from .world import ABSENT, ObjectInstance, PropertyDelta, WorldState, diff_states

__all__ = [
    "ProgressReport",
    "cascade_determiner",
    "check_task",
    "find_candidates",
    "ClassHierarchy",
    "TaskLibrary",
    "load_library",
    "shipped_library",
    "Determiner",
    "GroundTask",
    "TaskDefinition",
    "parse_task_definition",
    "render_desc",
    "serialize_task_definition",
    "substitute_params",
    "ABSENT",
    "ObjectInstance",
    "PropertyDelta",
    "WorldState",
    "diff_states",
]
