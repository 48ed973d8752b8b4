"""Session recording and deterministic replay.

A session is the full record of one episode: initial world, timestamped
interleaved dialogue and environment actions with their success flags, and
the final world. Replaying the environment actions from the initial state
must reproduce the recorded final state hash exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .actions import (
    Action,
    Utterance,
    action_from_dict,
    action_to_dict,
    is_dialogue,
)
from .errors import ReplayDivergence
from .floorplan import Floorplan
from .library import TaskLibrary
from .sim import ActionResult, SimConfig, step
from .world import WorldState

TIME_STEP_MS = 100


@dataclass
class ActionRecord:
    time_ms: int
    agent: str  # "commander" | "follower"
    action: Action
    success: bool
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "time_ms": self.time_ms,
            "agent": self.agent,
            "action": action_to_dict(self.action),
            "success": 1 if self.success else 0,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d) -> "ActionRecord":
        return cls(
            time_ms=d["time_ms"],
            agent=d["agent"],
            action=action_from_dict(d["action"]),
            success=bool(d["success"]),
            error=d.get("error"),
        )


@dataclass
class Session:
    session_id: str
    floorplan_id: str
    task_name: str
    task_params: tuple
    seed: int
    initial_state: WorldState
    actions: list = field(default_factory=list)
    final_state: Optional[WorldState] = None

    def dialogue(self) -> list:
        return [r for r in self.actions if is_dialogue(r.action)]

    def follower_env_actions(self) -> list:
        return [
            r for r in self.actions if r.agent == "follower" and not is_dialogue(r.action)
        ]

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "session_id": self.session_id,
            "floorplan_id": self.floorplan_id,
            "task_name": self.task_name,
            "task_params": list(self.task_params),
            "seed": self.seed,
            "initial_state": self.initial_state.to_dict(),
            "actions": [r.to_dict() for r in self.actions],
            "final_state": self.final_state.to_dict() if self.final_state else None,
        }

    @classmethod
    def from_dict(cls, d) -> "Session":
        return cls(
            session_id=d["session_id"],
            floorplan_id=d["floorplan_id"],
            task_name=d["task_name"],
            task_params=tuple(d["task_params"]),
            seed=d["seed"],
            initial_state=WorldState.from_dict(d["initial_state"]),
            actions=[ActionRecord.from_dict(r) for r in d["actions"]],
            final_state=WorldState.from_dict(d["final_state"]) if d["final_state"] else None,
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Session":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class SessionRecorder:
    """Owns the live world for one episode and logs every action."""

    def __init__(self, session_id: str, scenario, config: SimConfig = None):
        self.config = config or SimConfig()
        self.session = Session(
            session_id=session_id,
            floorplan_id=scenario.floorplan_id,
            task_name=scenario.task_name,
            task_params=tuple(scenario.task_params),
            seed=scenario.seed,
            initial_state=scenario.world.snapshot(),
        )
        self.world = scenario.world.snapshot()

    def _stamp(self) -> int:
        return len(self.session.actions) * TIME_STEP_MS

    def record_utterance(self, agent: str, text: str):
        self.session.actions.append(
            ActionRecord(self._stamp(), agent, Utterance(text), True)
        )

    def record_step(self, plan: Floorplan, agent: str, action, lib: TaskLibrary) -> ActionResult:
        self.world, result = step(
            plan, self.world, action, agent, hierarchy=lib.hierarchy, config=self.config
        )
        self.session.actions.append(
            ActionRecord(self._stamp(), agent, action, result.success, result.error)
        )
        return result

    def finish(self) -> Session:
        self.session.final_state = self.world.snapshot()
        return self.session


def replay(session: Session, plan: Floorplan, lib: TaskLibrary, config: SimConfig = None):
    """Re-execute all environment actions from the initial state.

    Returns (final_world, per_action_results); raises ReplayDivergence the
    moment a success flag or the final state hash disagrees with the record.
    """
    config = config or SimConfig()
    world = session.initial_state.snapshot()
    results = []
    for index, record in enumerate(session.actions):
        if is_dialogue(record.action):
            results.append(ActionResult(True))
            continue
        world, result = step(
            plan, world, record.action, record.agent, hierarchy=lib.hierarchy, config=config
        )
        results.append(result)
        if result.success != record.success:
            raise ReplayDivergence(
                index,
                f"recorded success={record.success} but replay gave "
                f"success={result.success} ({result.error})",
            )
    if session.final_state is not None:
        got = world.state_hash()
        want = session.final_state.state_hash()
        if got != want:
            raise ReplayDivergence(len(session.actions), "final state hash mismatch")
    return world, results
