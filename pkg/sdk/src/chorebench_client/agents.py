"""Reference agents: a scripted replay Follower and a random Follower."""

from __future__ import annotations

import random

from .client import AgentHandle, Interact, Motion, RawAction, ServerEvent, Stop

_MOVE_NAMES = ("Forward", "Backward", "TurnLeft", "TurnRight", "StrafeLeft", "StrafeRight")


class ReplayFollower(AgentHandle):
    """Replays the instance's reference actions verbatim, then stops.

    Demonstrates the transport-only contract: the reference list arrives in
    the episode_start payload and is echoed back action by action.
    """

    def __init__(self):
        self.actions = []
        self.cursor = 0

    def on_episode_start(self, payload: dict):
        instance = payload.get("instance", {})
        self.actions = list(instance.get("reference_actions", []))
        self.cursor = 0

    def on_observation(self, event: ServerEvent):
        if self.cursor >= len(self.actions):
            return Stop()
        action = self.actions[self.cursor]
        self.cursor += 1
        return RawAction(action)


class RandomFollower(AgentHandle):
    """Uniform random motions with occasional blind interactions."""

    def __init__(self, seed: int = 0, max_steps: int = 30):
        self.rng = random.Random(seed)
        self.max_steps = max_steps
        self.steps = 0

    def on_episode_start(self, payload: dict):
        self.steps = 0

    def on_observation(self, event: ServerEvent):
        self.steps += 1
        if self.steps > self.max_steps:
            return Stop()
        if self.rng.random() < 0.2:
            visible = event.visible
            if visible and visible[0].get("coord"):
                x, y = visible[self.rng.randrange(len(visible))].get("coord") or (0.5, 0.5)
            else:
                x, y = self.rng.random(), self.rng.random()
            return Interact("Pickup", round(x, 2), round(y, 2))
        return Motion(self.rng.choice(_MOVE_NAMES))
