"""Client SDK for the chorebench agent wire protocol."""

__version__ = "0.1.0"

from .agents import RandomFollower, ReplayFollower
from .client import (
    AgentHandle,
    CameraMotion,
    Interact,
    Motion,
    ProgressCheck,
    RawAction,
    SearchObject,
    ServerEvent,
    Stop,
    Utterance,
    run_agent,
    run_stdio_agent,
)
from .protocol import ClientProtocolError, Connection, Envelope, decode, encode

__all__ = [
    "AgentHandle",
    "ServerEvent",
    "Motion",
    "Interact",
    "Stop",
    "ProgressCheck",
    "SearchObject",
    "CameraMotion",
    "RawAction",
    "Utterance",
    "run_agent",
    "run_stdio_agent",
    "ReplayFollower",
    "RandomFollower",
    "Connection",
    "Envelope",
    "encode",
    "decode",
    "ClientProtocolError",
]
