"""Action model and the templated instruction-token grammar.

Instruction utterances are space-separated tokens with a one-to-one mapping
to Follower actions: bare motion names plus interaction tokens of the form
"<Verb> <ObjectType> at <x> <y>" with normalized coordinates at two decimals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .errors import ChoreBenchError

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

COMMANDER = "commander"
FOLLOWER = "follower"


@dataclass(frozen=True)
class ObjectSelector:
    """Either a direct object id or a normalized egocentric coordinate."""

    object_id: Optional[str] = None
    coord: Optional[tuple] = None

    def __post_init__(self):
        if (self.object_id is None) == (self.coord is None):
            raise ValueError("selector needs exactly one of object_id or coord")
        if self.coord is not None:
            x, y = self.coord
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ValueError("selector coordinates must be in [0, 1]")

    def to_dict(self) -> dict:
        if self.object_id is not None:
            return {"object_id": self.object_id}
        return {"coord": [self.coord[0], self.coord[1]]}

    @classmethod
    def from_dict(cls, d) -> "ObjectSelector":
        if "object_id" in d and d["object_id"] is not None:
            return cls(object_id=d["object_id"])
        x, y = d["coord"]
        return cls(coord=(float(x), float(y)))


@dataclass(frozen=True)
class Utterance:
    text: str


@dataclass(frozen=True)
class Motion:
    name: str

    def __post_init__(self):
        if self.name not in MOTIONS:
            raise ValueError(f"unknown motion: {self.name}")


@dataclass(frozen=True)
class Interact:
    verb: str
    target: ObjectSelector
    object_type: Optional[str] = None  # advisory; resolution is by selector

    def __post_init__(self):
        if self.verb not in INTERACTION_VERBS:
            raise ValueError(f"unknown interaction verb: {self.verb}")


@dataclass(frozen=True)
class ProgressCheck:
    pass


@dataclass(frozen=True)
class SearchObject:
    query: str


@dataclass(frozen=True)
class CameraMotion:
    name: str

    def __post_init__(self):
        if self.name not in MOTIONS:
            raise ValueError(f"unknown camera motion: {self.name}")


@dataclass(frozen=True)
class Stop:
    pass


Action = Union[Utterance, Motion, Interact, ProgressCheck, SearchObject, CameraMotion, Stop]


def is_dialogue(action) -> bool:
    return isinstance(action, Utterance)


def is_interaction(action) -> bool:
    return isinstance(action, Interact)


def is_env_action(action) -> bool:
    return isinstance(action, (Motion, Interact, CameraMotion, ProgressCheck, SearchObject))


def action_to_dict(action) -> dict:
    if isinstance(action, Utterance):
        return {"kind": "utterance", "text": action.text}
    if isinstance(action, Motion):
        return {"kind": "motion", "name": action.name}
    if isinstance(action, Interact):
        d = {"kind": "interact", "verb": action.verb, "target": action.target.to_dict()}
        if action.object_type:
            d["object_type"] = action.object_type
        return d
    if isinstance(action, ProgressCheck):
        return {"kind": "progress_check"}
    if isinstance(action, SearchObject):
        return {"kind": "search_object", "query": action.query}
    if isinstance(action, CameraMotion):
        return {"kind": "camera_motion", "name": action.name}
    if isinstance(action, Stop):
        return {"kind": "stop"}
    raise ChoreBenchError(f"unknown action: {action!r}")


def action_from_dict(d) -> Action:
    kind = d.get("kind")
    if kind == "utterance":
        return Utterance(d["text"])
    if kind == "motion":
        return Motion(d["name"])
    if kind == "interact":
        return Interact(d["verb"], ObjectSelector.from_dict(d["target"]), d.get("object_type"))
    if kind == "progress_check":
        return ProgressCheck()
    if kind == "search_object":
        return SearchObject(d["query"])
    if kind == "camera_motion":
        return CameraMotion(d["name"])
    if kind == "stop":
        return Stop()
    raise ChoreBenchError(f"unknown action kind: {kind!r}")


# ------------------------------------------------------- instruction tokens

_INTERACTION_RE = re.compile(
    r"^(?P<verb>[A-Za-z]+) (?P<otype>[A-Za-z]+) at (?P<x>[01]\.\d{2}) (?P<y>[01]\.\d{2})$"
)


def format_coord(v: float) -> str:
    return f"{min(max(v, 0.0), 1.0):.2f}"


def interaction_token(verb: str, object_type: str, x: float, y: float) -> str:
    if verb not in INTERACTION_VERBS:
        raise ChoreBenchError(f"unknown interaction verb: {verb}")
    return f"{verb} {object_type} at {format_coord(x)} {format_coord(y)}"


def tokenize_instruction(text: str) -> list[str]:
    """Split one Commander utterance into instruction tokens."""
    words = text.split()
    tokens = []
    i = 0
    while i < len(words):
        word = words[i]
        if word in MOTIONS:
            tokens.append(word)
            i += 1
        elif word in INTERACTION_VERBS:
            if i + 4 > len(words) or words[i + 2] != "at":
                raise ChoreBenchError(f"malformed interaction token at: {' '.join(words[i:i+5])}")
            tokens.append(" ".join(words[i : i + 5]))
            i += 5
        else:
            raise ChoreBenchError(f"unknown instruction token: {word}")
    return tokens


def parse_token(token: str) -> Action:
    """Map one instruction token to its Follower action."""
    if token in MOTIONS:
        return Motion(token)
    m = _INTERACTION_RE.match(token)
    if m and m.group("verb") in INTERACTION_VERBS:
        coord = (float(m.group("x")), float(m.group("y")))
        return Interact(m.group("verb"), ObjectSelector(coord=coord), m.group("otype"))
    raise ChoreBenchError(f"unparseable instruction token: {token!r}")
