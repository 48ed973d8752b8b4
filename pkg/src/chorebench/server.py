"""Protocol server and channel-driven episode loops.

Two serving modes: TATC pairs a Commander and a Follower connection per
session; EDH/TfD serves benchmark instances to a single Follower connection.
The same message flow runs over TCP (serve) or a child process's stdio
(eval --agent-cmd); see docs/protocol.md for the bit-exact field names.
"""

from __future__ import annotations

import socket
import socketserver
import threading
from dataclasses import dataclass

from .actions import (
    COMMANDER,
    FOLLOWER,
    CameraMotion,
    Interact,
    Motion,
    ProgressCheck,
    SearchObject,
    Stop,
    action_from_dict,
)
from .bench.inference import FollowerAgent, InferenceLimits, run_inference
from .bench.metrics import score
from .checker import check_task
from .errors import ProtocolViolation
from .floorplan import Floorplan
from .library import TaskLibrary
from .protocol import LineChannel
from .sim import observe, search_object
from .session import SessionRecorder


@dataclass
class ServeConfig:
    max_steps: int = 1000
    max_fails: int = 30
    idle_timeout: float = 60.0


# ---------------------------------------------------------------- helpers


def _follower_observation(plan, world, dialogue, last_result=None) -> dict:
    payload = observe(plan, world, FOLLOWER, last_result).to_dict()
    payload["dialogue"] = list(dialogue)
    return payload


def _commander_observation(plan, world, dialogue, last_result=None) -> dict:
    return {
        "actor": COMMANDER,
        "pose": world.commander.to_dict(),
        "world": world.to_dict(),
        "dialogue": list(dialogue),
        "last_result": last_result.to_dict() if last_result else None,
    }


class ChannelAgent(FollowerAgent):
    """Adapts a protocol channel to the in-process FollowerAgent interface."""

    def __init__(self, channel: LineChannel, benchmark: str):
        self.channel = channel
        self.benchmark = benchmark

    def begin(self, instance_payload: dict):
        self.channel.send(
            "episode_start",
            {"benchmark": self.benchmark, "role": FOLLOWER, "instance": instance_payload},
        )

    def act(self, observation: dict) -> dict:
        self.channel.send("observation", observation)
        while True:
            msg = self.channel.recv()
            if msg is None:
                raise ProtocolViolation("agent closed the connection mid-episode")
            if msg.kind == "action":
                return msg.payload.get("action", {})
            if msg.kind == "error":
                continue  # agent-side complaint; keep waiting for an action
            self.channel.send_error(
                "unexpected_kind",
                f"expected an action message, got {msg.kind}",
                ref_seq=msg.seq,
            )

    def end(self, result: dict):
        pass  # the evaluator sends episode_end with the scored row


def evaluate_instances_over_channel(
    channel: LineChannel,
    instances,
    plans: dict,
    lib: TaskLibrary,
    limits: InferenceLimits = None,
    benchmark: str = "edh",
):
    """Run every instance against the connected agent; yields result rows.

    Each instance ends with an episode_end message carrying the scored row.
    """
    agent = ChannelAgent(channel, benchmark)
    for instance in instances:
        plan = plans[instance.floorplan_id]
        try:
            outcome = run_inference(agent, instance, plan, lib, limits)
            metrics = score(outcome, instance)
            halt = outcome.halt
            pred = len(outcome.predicted_actions)
        except ProtocolViolation as exc:
            channel.send_error("protocol_violation", str(exc))
            metrics = {"SR": 0.0, "GC": 0.0, "TLW_SR": 0.0, "TLW_GC": 0.0}
            halt = "protocol_error"
            pred = 0
        row = {
            "instance_id": instance.instance_id,
            "task_name": instance.task_name,
            "halt": halt,
            "predicted": pred,
            "reference": len(instance.reference_actions),
            **metrics,
        }
        try:
            channel.send("episode_end", row)
        except OSError:
            pass
        yield row


# ------------------------------------------------------------- TATC loop

_COMMANDER_ACTIONS = (ProgressCheck, SearchObject, CameraMotion)
_FOLLOWER_ACTIONS = (Motion, Interact)


def run_tatc_over_channels(
    scenario,
    plan: Floorplan,
    lib: TaskLibrary,
    follower_ch: LineChannel,
    commander_ch: LineChannel,
    config: ServeConfig = None,
    session_id: str = None,
):
    """Drive one two-agent session over a pair of protocol channels."""
    config = config or ServeConfig()
    if session_id is None:
        session_id = f"{scenario.task_name.replace(' ', '')}_{scenario.floorplan_id}_s{scenario.seed}"
    ground = lib.ground(scenario.task_name, scenario.task_params)
    recorder = SessionRecorder(session_id, scenario)
    start_payload = {
        "benchmark": "tatc",
        "session_id": session_id,
        "floorplan_id": scenario.floorplan_id,
        "floorplan": plan.to_dict(),
    }
    follower_ch.send("episode_start", {**start_payload, "role": FOLLOWER})
    commander_ch.send("episode_start", {**start_payload, "role": COMMANDER})
    dialogue: list[dict] = []
    turn = FOLLOWER
    env_steps = 0
    fails = 0
    success = False
    reason = "stop"
    last_result = {FOLLOWER: None, COMMANDER: None}
    prompt_pending = {FOLLOWER: True, COMMANDER: True}

    def prompt(role):
        channel = follower_ch if role == FOLLOWER else commander_ch
        if role == FOLLOWER:
            payload = _follower_observation(plan, recorder.world, dialogue, last_result[role])
        else:
            payload = _commander_observation(plan, recorder.world, dialogue, last_result[role])
        channel.send("observation", payload)

    try:
        while True:
            channel = follower_ch if turn == FOLLOWER else commander_ch
            if prompt_pending[turn]:
                prompt(turn)
                prompt_pending[turn] = False
            msg = channel.recv()
            if msg is None:
                reason = "disconnect"
                break
            if msg.kind == "utterance":
                text = str(msg.payload.get("text", ""))
                recorder.record_utterance(turn, text)
                dialogue.append({"speaker": turn, "text": text})
                turn = COMMANDER if turn == FOLLOWER else FOLLOWER
                prompt_pending[turn] = True
                continue
            if msg.kind != "action":
                channel.send_error(
                    "unexpected_kind", f"cannot handle {msg.kind} here", ref_seq=msg.seq
                )
                continue
            try:
                action = action_from_dict(msg.payload.get("action", {}))
            except Exception as exc:
                channel.send_error("bad_action", str(exc), ref_seq=msg.seq)
                continue
            if isinstance(action, Stop):
                reason = "stop"
                break
            allowed = _COMMANDER_ACTIONS if turn == COMMANDER else _FOLLOWER_ACTIONS
            if not isinstance(action, allowed):
                channel.send_error(
                    "role_violation",
                    f"{turn} may not perform {type(action).__name__}",
                    ref_seq=msg.seq,
                )
                continue
            result = recorder.record_step(plan, turn, action, lib)
            last_result[turn] = result
            if isinstance(action, ProgressCheck):
                report = check_task(recorder.world, ground, lib)
                channel.send("progress_report", {"report": report.to_dict()})
                continue
            if isinstance(action, SearchObject):
                hits = search_object(recorder.world, action.query)
                channel.send(
                    "search_result",
                    {"query": action.query, "hits": [h.to_dict() for h in hits]},
                )
                continue
            if turn == FOLLOWER:
                env_steps += 1
                if not result.success:
                    fails += 1
            if env_steps >= config.max_steps or fails >= config.max_fails:
                reason = "limit"
                break
            prompt_pending[turn] = True
    except (ProtocolViolation, socket.timeout, OSError) as exc:
        reason = f"protocol_error: {exc}"
    success = bool(check_task(recorder.world, ground, lib).success)
    session = recorder.finish()
    end_payload = {"success": 1 if success else 0, "reason": reason}
    for channel in (follower_ch, commander_ch):
        try:
            channel.send("episode_end", end_payload)
        except OSError:
            pass
    return session, success


# --------------------------------------------------------------- TCP server


class _Pairing:
    def __init__(self):
        self.lock = threading.Lock()
        self.waiting: dict = {}


class AgentServer:
    """Threaded TCP server speaking the line protocol.

    mode "tatc" pairs connections by role and runs scenario episodes;
    mode "edh"/"tfd" evaluates each connection against a fixed instance list.
    """

    def __init__(
        self,
        host: str,
        port: int,
        lib: TaskLibrary,
        plans: dict,
        mode: str = "tatc",
        scenarios=None,
        instances=None,
        config: ServeConfig = None,
        out_dir=None,
    ):
        self.lib = lib
        self.plans = plans
        self.mode = mode
        self.scenarios = list(scenarios or [])
        self.instances = list(instances or [])
        self.config = config or ServeConfig()
        self.out_dir = out_dir
        self.results: list = []
        self.sessions: list = []
        self._scenario_index = 0
        self._pairing = _Pairing()
        outer = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                self.connection.settimeout(outer.config.idle_timeout)
                reader = self.rfile
                writer = _SocketWriter(self.wfile)
                channel = LineChannel(_TextReader(reader), writer, "pending")
                outer._handle_connection(channel)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = Server((host, port), Handler)
        self.port = self._server.server_address[1]

    def _next_scenario(self):
        with self._pairing.lock:
            if self._scenario_index >= len(self.scenarios):
                return None
            scenario = self.scenarios[self._scenario_index]
            self._scenario_index += 1
            return scenario

    def _handle_connection(self, channel: LineChannel):
        try:
            hello = channel.recv()
        except ProtocolViolation as exc:
            channel.send_error("bad_handshake", str(exc))
            return
        if hello is None:
            return
        if hello.kind != "episode_start":
            channel.send_error(
                "bad_handshake", "first message must be episode_start", ref_seq=hello.seq
            )
            return
        if self.mode in ("edh", "tfd"):
            rows = list(
                evaluate_instances_over_channel(
                    channel,
                    self.instances,
                    self.plans,
                    self.lib,
                    InferenceLimits(self.config.max_steps, self.config.max_fails),
                    benchmark=self.mode,
                )
            )
            self.results.extend(rows)
            return
        role = hello.payload.get("role")
        if role not in (FOLLOWER, COMMANDER):
            channel.send_error("bad_role", f"unknown role {role!r}", ref_seq=hello.seq)
            return
        self._pair_and_run(role, channel)

    def _pair_and_run(self, role: str, channel: LineChannel):
        other_role = COMMANDER if role == FOLLOWER else FOLLOWER
        with self._pairing.lock:
            if other_role in self._pairing.waiting:
                peer_channel, done = self._pairing.waiting.pop(other_role)
                run = True
            else:
                done = threading.Event()
                self._pairing.waiting[role] = (channel, done)
                run = False
        if not run:
            done.wait()
            return
        scenario = self._next_scenario()
        if scenario is None:
            for ch in (channel, peer_channel):
                ch.send_error("no_scenarios", "no scenario available")
            done.set()
            return
        plan = self.plans[scenario.floorplan_id]
        follower_ch = channel if role == FOLLOWER else peer_channel
        commander_ch = channel if role == COMMANDER else peer_channel
        sid = f"{scenario.task_name.replace(' ', '')}_{scenario.floorplan_id}_s{scenario.seed}"
        follower_ch.session_id = commander_ch.session_id = sid
        try:
            session, success = run_tatc_over_channels(
                scenario, plan, self.lib, follower_ch, commander_ch, self.config, sid
            )
            self.sessions.append((session, success))
            if self.out_dir is not None:
                session.save(f"{self.out_dir}/{session.session_id}.json")
        finally:
            done.set()

    def serve_forever(self):
        self._server.serve_forever()

    def serve_background(self) -> threading.Thread:
        thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        thread.start()
        return thread

    def shutdown(self):
        self._server.shutdown()
        self._server.server_close()


class _TextReader:
    def __init__(self, raw):
        self.raw = raw

    def readline(self):
        data = self.raw.readline()
        return data.decode("utf-8") if isinstance(data, bytes) else data


class _SocketWriter:
    def __init__(self, raw):
        self.raw = raw

    def write(self, text: str):
        self.raw.write(text.encode("utf-8"))

    def flush(self):
        self.raw.flush()
