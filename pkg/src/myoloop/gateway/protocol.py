"""reviewer/v1 wire protocol: text messages, length-delimited, canonical JSON.

One message on the wire is ``<байт-length> <json>\\n`` where the length counts
the UTF-8 bytes of the JSON text. Every message carries ``v`` (protocol
version), ``seq`` (gap-free per connection), ``t`` (engine seconds), and
``type``. Payload fields sit flat beside them. Canonical encoding (sorted
keys, no whitespace, repr floats) makes transcripts byte-comparable.
"""
from __future__ import annotations

import json
import math
from typing import Iterator

from ..errors import MessageError

PROTOCOL_VERSION = "reviewer/v1"

SERVER_TYPES = frozenset(
    {"clusters", "cursor3d", "decision", "flt_state", "session_state", "error"}
)
CLIENT_TYPES = frozenset(
    {"start_calibration", "collect", "recalibrate", "end_exploration", "start_trial", "subscribe"}
)


def jsonable(value):
    """Coerce payload values to JSON-safe types (non-finite floats to None)."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):  # numpy scalar
        return jsonable(value.item())
    return value


def make_message(type_: str, seq: int, t: float, **payload) -> dict:
    if type_ not in SERVER_TYPES and type_ not in CLIENT_TYPES:
        raise MessageError(f"unknown message type {type_!r}")
    msg = {"v": PROTOCOL_VERSION, "seq": seq, "t": t, "type": type_}
    msg.update(jsonable(payload))
    return msg


def encode_json(msg: dict) -> str:
    return json.dumps(msg, sort_keys=True, separators=(",", ":"), allow_nan=False)


def encode_message(msg: dict) -> bytes:
    payload = encode_json(msg).encode("utf-8")
    return str(len(payload)).encode("ascii") + b" " + payload + b"\n"


def decode_message(data: bytes | str) -> dict:
    """Parse one length-delimited message, validating version and type."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    head, sep, rest = data.partition(b" ")
    if not sep:
        raise MessageError("missing length prefix")
    try:
        length = int(head)
    except ValueError:
        raise MessageError(f"bad length prefix {head!r}")
    body = rest.rstrip(b"\n")
    if len(body) != length:
        raise MessageError(f"length prefix {length} does not match body of {len(body)} bytes")
    try:
        msg = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MessageError(f"undecodable message body: {exc}")
    if not isinstance(msg, dict):
        raise MessageError("message must be a JSON object")
    if msg.get("v") != PROTOCOL_VERSION:
        raise MessageError(f"unsupported protocol version {msg.get('v')!r}")
    type_ = msg.get("type")
    if type_ not in SERVER_TYPES and type_ not in CLIENT_TYPES:
        raise MessageError(f"unknown message type {type_!r}")
    if "seq" not in msg:
        raise MessageError("message missing sequence number")
    return msg


def write_transcript(path, messages: list[dict]) -> None:
    with open(path, "wb") as fh:
        for msg in messages:
            fh.write(encode_message(msg))


def read_transcript(path) -> list[dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    return list(iter_transcript(blob))


def iter_transcript(blob: bytes) -> Iterator[dict]:
    pos = 0
    while pos < len(blob):
        sep = blob.index(b" ", pos)
        length = int(blob[pos:sep])
        end = sep + 1 + length
        yield decode_message(blob[pos : end + 1])
        pos = end + 1
