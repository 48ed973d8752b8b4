"""Benchmark instance construction from recorded sessions.

EDH instances are dialogue-bounded segments: each reference window starts at
the first environment action after a dialogue act and is cut at the next
dialogue act where the window holds at least one object interaction and a
non-empty set of task-relevant state changes. Windows that do not yet
qualify extend across the dialogue boundary, so every session interaction
lands in exactly one instance's reference actions (only a trailing
never-qualifying window is dropped). TfD instances cover the whole session.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..actions import (
    Action,
    Stop,
    action_from_dict,
    action_to_dict,
    is_dialogue,
    is_interaction,
)
from ..checker import find_candidates
from ..errors import ChoreBenchError
from ..floorplan import Floorplan
from ..library import TaskLibrary
from ..session import ActionRecord, Session
from ..sim import SimConfig, step
from ..tdl import GroundTask, TaskRefComponent
from ..world import PropertyDelta, WorldState, diff_states


@dataclass
class EdhInstance:
    instance_id: str
    task_name: str
    task_params: tuple
    floorplan_id: str
    state_at_start: WorldState
    history: list                      # ActionRecords: dialogue + env interleaved
    reference_actions: list            # Follower env Actions, ending in Stop
    expected_deltas: frozenset

    def __post_init__(self):
        if not any(is_dialogue(r.action) for r in self.history):
            raise ChoreBenchError(f"{self.instance_id}: history holds no dialogue act")
        env = [a for a in self.reference_actions if not isinstance(a, Stop)]
        if not any(is_interaction(a) for a in env):
            raise ChoreBenchError(f"{self.instance_id}: no object interaction in reference")
        if not isinstance(self.reference_actions[-1], Stop):
            raise ChoreBenchError(f"{self.instance_id}: reference must end in Stop")
        if not self.expected_deltas:
            raise ChoreBenchError(f"{self.instance_id}: empty expected delta set")

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "kind": "edh",
            "instance_id": self.instance_id,
            "task_name": self.task_name,
            "task_params": list(self.task_params),
            "floorplan_id": self.floorplan_id,
            "state_at_start": self.state_at_start.to_dict(),
            "history": [r.to_dict() for r in self.history],
            "reference_actions": [action_to_dict(a) for a in self.reference_actions],
            "expected_deltas": [
                d.to_dict() for d in sorted(self.expected_deltas, key=lambda d: (d.object_id, d.prop))
            ],
        }

    @classmethod
    def from_dict(cls, d) -> "EdhInstance":
        return cls(
            instance_id=d["instance_id"],
            task_name=d["task_name"],
            task_params=tuple(d["task_params"]),
            floorplan_id=d["floorplan_id"],
            state_at_start=WorldState.from_dict(d["state_at_start"]),
            history=[ActionRecord.from_dict(r) for r in d["history"]],
            reference_actions=[action_from_dict(a) for a in d["reference_actions"]],
            expected_deltas=frozenset(
                PropertyDelta.from_dict(x) for x in d["expected_deltas"]
            ),
        )


@dataclass
class TfdInstance:
    instance_id: str
    task_name: str
    task_params: tuple
    floorplan_id: str
    initial_state: WorldState
    dialogue: list                     # utterance ActionRecords, both agents, in order
    reference_actions: list            # Follower env Actions + Stop
    expected_deltas: frozenset

    def __post_init__(self):
        if not self.expected_deltas:
            raise ChoreBenchError(f"{self.instance_id}: no state change between start and end")
        if not isinstance(self.reference_actions[-1], Stop):
            raise ChoreBenchError(f"{self.instance_id}: reference must end in Stop")

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "kind": "tfd",
            "instance_id": self.instance_id,
            "task_name": self.task_name,
            "task_params": list(self.task_params),
            "floorplan_id": self.floorplan_id,
            "initial_state": self.initial_state.to_dict(),
            "dialogue": [r.to_dict() for r in self.dialogue],
            "reference_actions": [action_to_dict(a) for a in self.reference_actions],
            "expected_deltas": [
                d.to_dict() for d in sorted(self.expected_deltas, key=lambda d: (d.object_id, d.prop))
            ],
        }

    @classmethod
    def from_dict(cls, d) -> "TfdInstance":
        return cls(
            instance_id=d["instance_id"],
            task_name=d["task_name"],
            task_params=tuple(d["task_params"]),
            floorplan_id=d["floorplan_id"],
            initial_state=WorldState.from_dict(d["initial_state"]),
            dialogue=[ActionRecord.from_dict(r) for r in d["dialogue"]],
            reference_actions=[action_from_dict(a) for a in d["reference_actions"]],
            expected_deltas=frozenset(
                PropertyDelta.from_dict(x) for x in d["expected_deltas"]
            ),
        )


# ------------------------------------------------------ relevance filter


def _flat_atomic_components(ground: GroundTask, lib: TaskLibrary, out: list):
    for comp in ground.components.values():
        if isinstance(comp, TaskRefComponent):
            _flat_atomic_components(lib.ground(comp.task_name, comp.task_params), lib, out)
        else:
            out.append(comp)


def _closure_relation_properties(ground: GroundTask, lib: TaskLibrary) -> set:
    props = {rel.property for rel in ground.relations}
    for comp in ground.components.values():
        if isinstance(comp, TaskRefComponent):
            props |= _closure_relation_properties(
                lib.ground(comp.task_name, comp.task_params), lib
            )
    return props


class TaskRelevanceFilter:
    """Keeps deltas on (component-candidate object, condition-or-relation
    property) pairs; everything else is incidental and dropped."""

    def __init__(self, ground: GroundTask, lib: TaskLibrary, worlds):
        comps: list = []
        _flat_atomic_components(ground, lib, comps)
        rel_props = _closure_relation_properties(ground, lib)
        self.allowed: dict[str, set] = {}
        for comp in comps:
            props = set(comp.conditions) | rel_props
            props.discard("objectClass")
            props.add("objectType")
            for world in worlds:
                for object_id in find_candidates(world, comp, lib.hierarchy):
                    self.allowed.setdefault(object_id, set()).update(props)

    def __call__(self, deltas) -> frozenset:
        return frozenset(
            d for d in deltas if d.prop in self.allowed.get(d.object_id, ())
        )


def filter_task_relevant(
    deltas, ground: GroundTask, lib: TaskLibrary, worlds
) -> frozenset:
    return TaskRelevanceFilter(ground, lib, worlds)(deltas)


# ----------------------------------------------------------- segmentation


def segment_edh(
    session: Session,
    plan: Floorplan,
    lib: TaskLibrary,
    config: SimConfig = None,
    drop_commander_ops: bool = False,
) -> list[EdhInstance]:
    """Split one session into EDH instances by replaying it.

    Histories keep Commander environment actions (progress checks, searches,
    camera moves) by default; drop_commander_ops removes them, leaving only
    dialogue and Follower actions.
    """
    config = config or SimConfig()
    ground = lib.ground(session.task_name, session.task_params)
    world = session.initial_state.snapshot()
    instances: list[EdhInstance] = []
    seen_dialogue = False
    window_start: int | None = None
    window_state: WorldState | None = None

    def try_cut(end_index: int):
        nonlocal window_start, window_state
        if window_start is None:
            return
        window = session.actions[window_start:end_index]
        refs = [
            r.action
            for r in window
            if r.agent == "follower" and not is_dialogue(r.action)
        ]
        if not any(is_interaction(a) for a in refs):
            return
        filt = TaskRelevanceFilter(ground, lib, (window_state, world))
        deltas = filt(diff_states(window_state, world))
        if not deltas:
            return
        history = list(session.actions[:window_start])
        if drop_commander_ops:
            history = [
                r for r in history if r.agent == "follower" or is_dialogue(r.action)
            ]
        instances.append(
            EdhInstance(
                instance_id=f"{session.session_id}.edh{len(instances)}",
                task_name=session.task_name,
                task_params=session.task_params,
                floorplan_id=session.floorplan_id,
                state_at_start=window_state,
                history=history,
                reference_actions=refs + [Stop()],
                expected_deltas=deltas,
            )
        )
        window_start = None
        window_state = None

    for index, record in enumerate(session.actions):
        if is_dialogue(record.action):
            try_cut(index)
            seen_dialogue = True
            continue
        if seen_dialogue and window_start is None:
            window_start = index
            window_state = world.snapshot()
        world, result = step(
            plan, world, record.action, record.agent,
            hierarchy=lib.hierarchy, config=config,
        )
        if result.success != record.success:
            raise ChoreBenchError(
                f"{session.session_id}: replay diverged at action {index}"
            )
    try_cut(len(session.actions))
    return instances


def extract_tfd(session: Session) -> TfdInstance:
    """Whole-session instance: all dialogue, all Follower environment actions."""
    if session.final_state is None:
        raise ChoreBenchError(f"{session.session_id}: session has no final state")
    dialogue = [r for r in session.actions if is_dialogue(r.action)]
    refs: list[Action] = [r.action for r in session.follower_env_actions()]
    return TfdInstance(
        instance_id=f"{session.session_id}.tfd",
        task_name=session.task_name,
        task_params=session.task_params,
        floorplan_id=session.floorplan_id,
        initial_state=session.initial_state.snapshot(),
        dialogue=dialogue,
        reference_actions=refs + [Stop()],
        expected_deltas=diff_states(session.initial_state, session.final_state),
    )
