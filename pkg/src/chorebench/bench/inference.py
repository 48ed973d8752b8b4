"""Inference driver: run an external or in-process Follower agent on a
benchmark instance under the standard step and failure limits."""

from __future__ import annotations

from dataclasses import dataclass

from ..actions import (
    FOLLOWER,
    Action,
    Interact,
    Motion,
    Stop,
    action_from_dict,
    action_to_dict,
)
from ..errors import ProtocolViolation
from ..floorplan import Floorplan
from ..library import TaskLibrary
from ..sim import SimConfig, observe, step
from .edh import EdhInstance, TaskRelevanceFilter, TfdInstance
from ..world import diff_states

HALT_STOP = "stop_predicted"
HALT_STEPS = "step_limit"
HALT_FAILS = "fail_limit"


@dataclass
class InferenceLimits:
    max_steps: int = 1000
    max_fails: int = 30


@dataclass
class EvalOutcome:
    predicted_actions: list
    achieved_deltas: frozenset
    halt: str
    failed_actions: int = 0

    def to_dict(self) -> dict:
        return {
            "predicted_actions": [action_to_dict(a) for a in self.predicted_actions],
            "achieved_deltas": [
                d.to_dict()
                for d in sorted(self.achieved_deltas, key=lambda d: (d.object_id, d.prop))
            ],
            "halt": self.halt,
            "failed_actions": self.failed_actions,
        }


class FollowerAgent:
    """Minimal in-process agent interface for run_inference."""

    def begin(self, instance_payload: dict):
        pass

    def act(self, observation: dict) -> dict:
        raise NotImplementedError

    def end(self, result: dict):
        pass


class OracleReplayAgent(FollowerAgent):
    """Replays an instance's reference actions verbatim, then stops."""

    def __init__(self, actions=None):
        self.actions = list(actions) if actions is not None else None
        self.cursor = 0

    def begin(self, instance_payload: dict):
        if self.actions is None:
            self.actions = [
                action_from_dict(a) for a in instance_payload["reference_actions"]
            ]
        self.cursor = 0

    def act(self, observation: dict) -> dict:
        if self.cursor >= len(self.actions):
            return action_to_dict(Stop())
        action = self.actions[self.cursor]
        self.cursor += 1
        return action_to_dict(action)


class ScriptedAgent(FollowerAgent):
    """Emits a fixed action list; used for limit boundary tests."""

    def __init__(self, actions):
        self.actions = list(actions)
        self.cursor = 0

    def act(self, observation: dict) -> dict:
        if self.cursor >= len(self.actions):
            return action_to_dict(Stop())
        action = self.actions[self.cursor]
        self.cursor += 1
        return action_to_dict(action)


def instance_payload(instance, include_state=False) -> dict:
    """What an agent is shown at episode start."""
    d = instance.to_dict()
    if not include_state:
        for key in ("state_at_start", "initial_state"):
            d.pop(key, None)
    return d


def run_inference(
    agent: FollowerAgent,
    instance,
    plan: Floorplan,
    lib: TaskLibrary,
    limits: InferenceLimits = None,
    config: SimConfig = None,
) -> EvalOutcome:
    """Drive one agent on one EDH or TfD instance.

    The agent may only answer with Follower environment actions or Stop;
    anything else raises ProtocolViolation and the caller scores the
    episode failed.
    """
    limits = limits or InferenceLimits()
    config = config or SimConfig()
    if isinstance(instance, EdhInstance):
        start = instance.state_at_start
        edh = True
    elif isinstance(instance, TfdInstance):
        start = instance.initial_state
        edh = False
    else:
        raise TypeError(f"not a benchmark instance: {instance!r}")
    world = start.snapshot()
    agent.begin(instance_payload(instance))
    predicted: list[Action] = []
    env_steps = 0
    fails = 0
    halt = None
    last_result = None
    while halt is None:
        obs = observe(plan, world, FOLLOWER, last_result)
        raw = agent.act(obs.to_dict())
        try:
            action = raw if isinstance(raw, (Motion, Interact, Stop)) else action_from_dict(raw)
        except Exception as exc:
            raise ProtocolViolation(f"unparseable action: {exc}") from exc
        if isinstance(action, Stop):
            predicted.append(action)
            halt = HALT_STOP
            break
        if not isinstance(action, (Motion, Interact)):
            raise ProtocolViolation(
                f"agents may only send Follower environment actions, got {raw!r}"
            )
        world, last_result = step(
            plan, world, action, FOLLOWER, hierarchy=lib.hierarchy, config=config
        )
        predicted.append(action)
        env_steps += 1
        if not last_result.success:
            fails += 1
            if fails >= limits.max_fails:
                halt = HALT_FAILS
                break
        if env_steps >= limits.max_steps:
            halt = HALT_STEPS
            break
    achieved = diff_states(start, world)
    if edh:
        ground = lib.ground(instance.task_name, instance.task_params)
        achieved = TaskRelevanceFilter(ground, lib, (start, world))(achieved)
    outcome = EvalOutcome(
        predicted_actions=predicted,
        achieved_deltas=achieved,
        halt=halt,
        failed_actions=fails,
    )
    agent.end(outcome.to_dict())
    return outcome
