"""Newline-delimited wire protocol for external agents.

Every line is one envelope, canonically encoded (sorted keys, compact
separators, ASCII) so independent client implementations can be checked
byte-for-byte against the golden vectors shipped in data/golden/.

Envelope fields: version, session_id, seq, kind, payload. Sequence numbers
increase by one per direction; unknown kinds are answered with an error
message carrying the offending seq, never a disconnect.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import ProtocolViolation

PROTOCOL_VERSION = 1

KINDS = (
    "observation",
    "action",
    "utterance",
    "progress_report",
    "search_result",
    "episode_start",
    "episode_end",
    "error",
)


@dataclass(frozen=True)
class Message:
    session_id: str
    seq: int
    kind: str
    payload: dict
    version: int = PROTOCOL_VERSION

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "session_id": self.session_id,
            "seq": self.seq,
            "kind": self.kind,
            "payload": self.payload,
        }


def encode_message(msg: Message) -> str:
    """Canonical single-line encoding, newline terminated."""
    return json.dumps(msg.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=True) + "\n"


def decode_message(line: str) -> Message:
    try:
        d = json.loads(line)
    except ValueError as exc:
        raise ProtocolViolation(f"not a JSON line: {exc}") from None
    if not isinstance(d, dict):
        raise ProtocolViolation("message must be a JSON object")
    for fieldname in ("version", "session_id", "seq", "kind", "payload"):
        if fieldname not in d:
            raise ProtocolViolation(f"missing envelope field {fieldname!r}")
    if d["version"] != PROTOCOL_VERSION:
        raise ProtocolViolation(f"unsupported protocol version {d['version']!r}")
    if not isinstance(d["seq"], int) or isinstance(d["seq"], bool):
        raise ProtocolViolation("seq must be an integer")
    if not isinstance(d["payload"], dict):
        raise ProtocolViolation("payload must be an object")
    return Message(
        session_id=d["session_id"],
        seq=d["seq"],
        kind=d["kind"],
        payload=d["payload"],
        version=d["version"],
    )


class LineChannel:
    """Seq-tracked message channel over a pair of text streams."""

    def __init__(self, reader, writer, session_id: str):
        self.reader = reader
        self.writer = writer
        self.session_id = session_id
        self.send_seq = 0
        self.recv_seq = 0

    def send(self, kind: str, payload: dict) -> Message:
        self.send_seq += 1
        msg = Message(self.session_id, self.send_seq, kind, payload)
        self.writer.write(encode_message(msg))
        self.writer.flush()
        return msg

    def recv(self) -> Optional[Message]:
        """Next message, or None at end of stream.

        A malformed line or a bad sequence number raises ProtocolViolation;
        callers decide whether to answer with an error message.
        """
        line = self.reader.readline()
        if not line:
            return None
        msg = decode_message(line)
        if msg.seq != self.recv_seq + 1:
            raise ProtocolViolation(
                f"out-of-order seq {msg.seq}, expected {self.recv_seq + 1}"
            )
        self.recv_seq = msg.seq
        return msg

    def send_error(self, code: str, message: str, ref_seq: Optional[int] = None):
        return self.send(
            "error",
            {"code": code, "message": message, "ref_seq": ref_seq},
        )


def golden_vectors() -> list[dict]:
    """Reference (message, encoded-line) pairs, one per message kind."""
    samples = [
        Message("golden", 1, "episode_start", {"role": "follower", "benchmark": "tatc", "floorplan_id": "kitchen_1"}),
        Message("golden", 2, "observation", {"pose": {"cell": [1, 2], "heading": "N", "pitch": 0}, "visible": []}),
        Message("golden", 3, "action", {"action": {"kind": "interact", "verb": "Pickup", "target": {"coord": [0.57, 0.25]}, "object_type": "Mug"}}),
        Message("golden", 4, "utterance", {"speaker": "follower", "text": "What should I do next?"}),
        Message("golden", 5, "progress_report", {"report": {"task_desc": "Make a cup of coffee in a clean mug.", "success": 0, "subgoals": []}}),
        Message("golden", 6, "search_result", {"query": "sink", "hits": [{"object_id": "Sink| 04.00| 01.00| 00.00", "object_type": "Sink", "parent_id": None, "cell": [4, 0], "location": "at cell (4, 0)"}]}),
        Message("golden", 7, "episode_end", {"success": 1, "halt": "stop_predicted", "scores": {"SR": 1.0, "GC": 1.0}}),
        Message("golden", 8, "error", {"code": "role_violation", "message": "only the Commander may ProgressCheck", "ref_seq": 3}),
    ]
    return [{"message": m.to_dict(), "line": encode_message(m)} for m in samples]
