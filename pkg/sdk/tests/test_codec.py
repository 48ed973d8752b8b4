import io
import json

import pytest

from chorebench_client.protocol import (
    ClientProtocolError,
    Connection,
    Envelope,
    decode,
    encode,
    golden_vector_records,
)


def test_golden_vectors_cover_all_kinds():
    kinds = {record["message"]["kind"] for record in golden_vector_records()}
    assert kinds == {
        "episode_start",
        "observation",
        "action",
        "utterance",
        "progress_report",
        "search_result",
        "episode_end",
        "error",
    }


def test_golden_vector_byte_parity():
    """SDK-serialized messages are byte-identical to the protocol vectors."""
    for record in golden_vector_records():
        message = record["message"]
        envelope = Envelope(
            session_id=message["session_id"],
            seq=message["seq"],
            kind=message["kind"],
            payload=message["payload"],
            version=message["version"],
        )
        assert encode(envelope) == record["line"]
        assert decode(record["line"]) == envelope


def test_decode_rejects_garbage():
    with pytest.raises(ClientProtocolError):
        decode("nope\n")
    with pytest.raises(ClientProtocolError):
        decode(json.dumps({"version": 1, "seq": 1}) + "\n")


def test_connection_seq_tracking():
    out = io.StringIO()
    sender = Connection(io.StringIO(), out, "s")
    sender.send("utterance", {"text": "a"})
    sender.send("utterance", {"text": "b"})
    receiver = Connection(io.StringIO(out.getvalue()), io.StringIO(), "s")
    assert receiver.recv().payload["text"] == "a"
    assert receiver.recv().payload["text"] == "b"
    stale = Connection(io.StringIO(out.getvalue() + out.getvalue()), io.StringIO(), "s")
    stale.recv()
    stale.recv()
    with pytest.raises(ClientProtocolError):
        stale.recv()
