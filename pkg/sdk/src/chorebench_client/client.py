"""Agent loop: typed server events in, one action or utterance out.

The SDK is transport plus typing only; it never interprets world state.
Subclass AgentHandle, implement on_observation, and hand it to run_agent
(TCP) or run_stdio_agent (for harness --agent-cmd evaluation).
"""

from __future__ import annotations

import socket
import sys
from dataclasses import dataclass
from typing import Optional, Union

from .protocol import ClientProtocolError, Connection

FOLLOWER = "follower"
COMMANDER = "commander"

MOTIONS = (
    "Forward",
    "Backward",
    "TurnLeft",
    "TurnRight",
    "LookUp",
    "LookDown",
    "StrafeLeft",
    "StrafeRight",
)
INTERACTION_VERBS = (
    "Pickup",
    "Place",
    "Open",
    "Close",
    "ToggleOn",
    "ToggleOff",
    "Slice",
    "Pour",
)


# ------------------------------------------------------------ typed values


@dataclass(frozen=True)
class Motion:
    name: str

    def to_payload(self) -> dict:
        return {"kind": "motion", "name": self.name}


@dataclass(frozen=True)
class Interact:
    verb: str
    x: float
    y: float
    object_type: Optional[str] = None

    def to_payload(self) -> dict:
        payload = {
            "kind": "interact",
            "verb": self.verb,
            "target": {"coord": [self.x, self.y]},
        }
        if self.object_type:
            payload["object_type"] = self.object_type
        return payload


@dataclass(frozen=True)
class Stop:
    def to_payload(self) -> dict:
        return {"kind": "stop"}


@dataclass(frozen=True)
class ProgressCheck:
    def to_payload(self) -> dict:
        return {"kind": "progress_check"}


@dataclass(frozen=True)
class SearchObject:
    query: str

    def to_payload(self) -> dict:
        return {"kind": "search_object", "query": self.query}


@dataclass(frozen=True)
class CameraMotion:
    name: str

    def to_payload(self) -> dict:
        return {"kind": "camera_motion", "name": self.name}


@dataclass(frozen=True)
class RawAction:
    """Escape hatch: send an action payload verbatim (replay agents)."""

    payload: dict

    def to_payload(self) -> dict:
        return dict(self.payload)


@dataclass(frozen=True)
class Utterance:
    text: str


Action = Union[Motion, Interact, Stop, ProgressCheck, SearchObject, CameraMotion, RawAction]


@dataclass(frozen=True)
class ServerEvent:
    """One prompting message from the harness.

    kind is "observation", "progress_report", or "search_result"; the typed
    convenience accessors read straight out of the payload.
    """

    kind: str
    payload: dict

    @property
    def pose(self) -> Optional[dict]:
        return self.payload.get("pose")

    @property
    def visible(self) -> list:
        return self.payload.get("visible", [])

    @property
    def held_object(self) -> Optional[str]:
        return self.payload.get("held_object")

    @property
    def dialogue(self) -> list:
        return self.payload.get("dialogue", [])

    @property
    def last_result(self) -> Optional[dict]:
        return self.payload.get("last_result")

    @property
    def report(self) -> Optional[dict]:
        return self.payload.get("report")

    @property
    def hits(self) -> list:
        return self.payload.get("hits", [])


class AgentHandle:
    """Base agent: exactly one action or utterance per prompting event."""

    role = FOLLOWER

    def on_episode_start(self, payload: dict):
        pass

    def on_observation(self, event: ServerEvent):
        raise NotImplementedError

    def on_episode_end(self, payload: dict):
        pass


_PROMPTING_KINDS = ("observation", "progress_report", "search_result")


def _drive(connection: Connection, handle: AgentHandle, *, send_hello: bool) -> list:
    if send_hello:
        connection.send("episode_start", {"role": handle.role})
    summaries = []
    while True:
        envelope = connection.recv()
        if envelope is None:
            return summaries
        if envelope.kind == "episode_start":
            handle.on_episode_start(envelope.payload)
            continue
        if envelope.kind == "episode_end":
            handle.on_episode_end(envelope.payload)
            summaries.append(envelope.payload)
            continue
        if envelope.kind == "error":
            raise ClientProtocolError(
                f"server error: {envelope.payload.get('code')}: "
                f"{envelope.payload.get('message')}",
                payload=envelope.payload,
            )
        if envelope.kind not in _PROMPTING_KINDS:
            continue
        reply = handle.on_observation(ServerEvent(envelope.kind, envelope.payload))
        if isinstance(reply, Utterance):
            connection.send("utterance", {"speaker": handle.role, "text": reply.text})
        elif hasattr(reply, "to_payload"):
            connection.send("action", {"action": reply.to_payload()})
        else:
            raise ClientProtocolError(
                f"on_observation must return an action or utterance, got {reply!r}"
            )


def run_agent(handle: AgentHandle, host: str = "127.0.0.1", port: int = 8642) -> list:
    """Connect over TCP and drive the loop until the server closes.

    Returns the episode_end payloads (one per episode played).
    """
    sock = socket.create_connection((host, port))
    try:
        reader = sock.makefile("r", encoding="utf-8")
        writer = sock.makefile("w", encoding="utf-8")
        return _drive(Connection(reader, writer), handle, send_hello=True)
    finally:
        sock.close()


def run_stdio_agent(handle: AgentHandle, stdin=None, stdout=None) -> list:
    """Drive the loop over stdio, for `eval --agent-cmd` style harnesses.

    The harness speaks first, so no hello is sent.
    """
    connection = Connection(stdin or sys.stdin, stdout or sys.stdout)
    return _drive(connection, handle, send_hello=False)
