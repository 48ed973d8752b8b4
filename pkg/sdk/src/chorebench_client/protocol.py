"""Wire codec: canonical newline-delimited JSON envelopes.

Kept independent of the engine; byte parity with the server is pinned by
the golden vectors shipped in data/protocol_vectors.jsonl.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

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


class ClientProtocolError(Exception):
    """Malformed or out-of-order traffic, or a server-sent error payload."""

    def __init__(self, message, payload=None):
        self.payload = payload or {}
        super().__init__(message)


@dataclass(frozen=True)
class Envelope:
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


def encode(envelope: Envelope) -> str:
    """Canonical single-line encoding: sorted keys, compact, ASCII."""
    return (
        json.dumps(envelope.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        + "\n"
    )


def decode(line: str) -> Envelope:
    try:
        data = json.loads(line)
    except ValueError as exc:
        raise ClientProtocolError(f"not a JSON line: {exc}") from None
    if not isinstance(data, dict):
        raise ClientProtocolError("message must be a JSON object")
    for name in ("version", "session_id", "seq", "kind", "payload"):
        if name not in data:
            raise ClientProtocolError(f"missing envelope field {name!r}")
    if data["version"] != PROTOCOL_VERSION:
        raise ClientProtocolError(f"unsupported protocol version {data['version']!r}")
    return Envelope(
        session_id=data["session_id"],
        seq=data["seq"],
        kind=data["kind"],
        payload=data["payload"],
        version=data["version"],
    )


class Connection:
    """Seq-tracked reader/writer pair."""

    def __init__(self, reader, writer, session_id: str = "client"):
        self.reader = reader
        self.writer = writer
        self.session_id = session_id
        self.send_seq = 0
        self.recv_seq = 0

    def send(self, kind: str, payload: dict) -> Envelope:
        self.send_seq += 1
        envelope = Envelope(self.session_id, self.send_seq, kind, payload)
        self.writer.write(encode(envelope))
        self.writer.flush()
        return envelope

    def recv(self):
        line = self.reader.readline()
        if not line:
            return None
        envelope = decode(line)
        if envelope.seq != self.recv_seq + 1:
            raise ClientProtocolError(
                f"out-of-order seq {envelope.seq}, expected {self.recv_seq + 1}"
            )
        self.recv_seq = envelope.seq
        return envelope


def golden_vector_records():
    import importlib.resources

    node = importlib.resources.files("chorebench_client") / "data" / "protocol_vectors.jsonl"
    return [json.loads(line) for line in node.read_text(encoding="utf-8").splitlines()]
