"""Rule agents as protocol clients, for transport-invariance checks and as
reference implementations of the wire flow."""

from __future__ import annotations

import socket

from ..actions import COMMANDER, FOLLOWER, action_to_dict, ProgressCheck, Stop
from ..checker import ProgressReport
from ..floorplan import Floorplan
from ..library import TaskLibrary
from ..protocol import LineChannel
from ..world import WorldState
from .commander import AgentConfig, RuleCommander
from .follower import RuleFollower


def open_channel(host: str, port: int, session_id: str = "client") -> LineChannel:
    sock = socket.create_connection((host, port))
    reader = sock.makefile("r", encoding="utf-8")
    writer = sock.makefile("w", encoding="utf-8")
    channel = LineChannel(reader, writer, session_id)
    channel._sock = sock  # keep alive
    return channel


def run_remote_follower(host: str, port: int):
    """Connect a rule Follower and play one TATC episode."""
    channel = open_channel(host, port)
    channel.send("episode_start", {"role": FOLLOWER})
    follower = RuleFollower()
    heard = 0
    while True:
        msg = channel.recv()
        if msg is None or msg.kind == "episode_end":
            return msg.payload if msg else None
        if msg.kind == "error":
            continue
        if msg.kind != "observation":
            continue
        for entry in msg.payload.get("dialogue", [])[heard:]:
            heard += 1
            if entry["speaker"] == COMMANDER:
                follower.hear(entry["text"])
        action = follower.next_action()
        if hasattr(action, "text"):
            channel.send("utterance", {"speaker": FOLLOWER, "text": action.text})
        else:
            channel.send("action", {"action": action_to_dict(action)})


def run_remote_commander(host: str, port: int, lib: TaskLibrary, config: AgentConfig = None):
    """Connect a rule Commander and play one TATC episode."""
    channel = open_channel(host, port)
    channel.send("episode_start", {"role": COMMANDER})
    commander = None
    plan = None
    world = None
    while True:
        msg = channel.recv()
        if msg is None or msg.kind == "episode_end":
            return msg.payload if msg else None
        if msg.kind == "error":
            continue
        if msg.kind == "episode_start":
            plan = Floorplan.from_dict(msg.payload["floorplan"])
            commander = RuleCommander(lib, None, plan, config)
            continue
        if msg.kind == "observation":
            world = WorldState.from_dict(msg.payload["world"])
            channel.send("action", {"action": action_to_dict(ProgressCheck())})
            continue
        if msg.kind == "progress_report":
            report = ProgressReport(msg.payload["report"])
            if report.success:
                channel.send("action", {"action": action_to_dict(Stop())})
                continue
            batch = commander.decide(world, report)
            if batch is None:
                channel.send("action", {"action": action_to_dict(Stop())})
            else:
                channel.send("utterance", {"speaker": COMMANDER, "text": " ".join(batch)})
            continue
