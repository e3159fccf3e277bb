"""Canonical encoding of live-session messages.

Both ends of the steering channel (this service and the browser console)
must produce identical bytes for identical messages, so the encoding is
pinned tightly:

* one JSON document per message, no newlines, compact separators;
* keys in the fixed per-type order given by ``MESSAGE_FIELDS``;
* floats rendered in fixed-point with exactly six fractional digits
  (negative zero normalized to zero); integers rendered bare;
* strings JSON-escaped, UTF-8, non-ASCII left unescaped.

Inbound types: set_skill, command, reset, pause, resume.
Outbound types: hello, state, error. ``state.routed_from`` is the one
optional field: present only while a free-text command is steering.
"""

from __future__ import annotations

import json
import math

FLOAT_DECIMALS = 6

MESSAGE_FIELDS = {
    "hello": ("type", "skills"),
    "state": ("type", "t", "root_pos", "root_heading", "joint_pos",
              "active_skill", "r_s", "routed_from"),
    "error": ("type", "code", "detail"),
    "set_skill": ("type", "skill_id"),
    "command": ("type", "text"),
    "reset": ("type",),
    "pause": ("type",),
    "resume": ("type",),
}

INBOUND_TYPES = ("set_skill", "command", "reset", "pause", "resume")
OUTBOUND_TYPES = ("hello", "state", "error")

_FLOAT_FIELDS = {"t", "root_heading", "r_s"}
_FLOAT_LIST_FIELDS = {"root_pos", "joint_pos"}
_INT_FIELDS = {"skill_id", "active_skill"}
_STR_FIELDS = {"type", "text", "code", "detail", "routed_from", "name", "caption"}


class WireError(ValueError):
    pass


def _fmt_float(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise WireError(f"non-finite float {x!r} in message")
    s = f"{x:.{FLOAT_DECIMALS}f}"
    # values rounding to zero magnitude lose their sign ("-0.000000" -> "0.000000")
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]
    return s


def _fmt_str(s) -> str:
    if not isinstance(s, str):
        raise WireError(f"expected string, got {type(s).__name__}")
    return json.dumps(s, ensure_ascii=False)


def _fmt_int(v) -> str:
    if isinstance(v, bool) or not isinstance(v, (int,)):
        raise WireError(f"expected integer, got {v!r}")
    return str(v)


def _fmt_skill_entry(entry) -> str:
    try:
        return ("{" + f'"skill_id":{_fmt_int(entry["skill_id"])},'
                f'"name":{_fmt_str(entry["name"])},'
                f'"caption":{_fmt_str(entry["caption"])}' + "}")
    except KeyError as exc:
        raise WireError(f"skill entry missing {exc}") from exc


def _fmt_value(field, value) -> str:
    if field in _FLOAT_FIELDS:
        return _fmt_float(value)
    if field in _FLOAT_LIST_FIELDS:
        return "[" + ",".join(_fmt_float(v) for v in value) + "]"
    if field in _INT_FIELDS:
        return _fmt_int(value)
    if field in _STR_FIELDS:
        return _fmt_str(value)
    if field == "skills":
        return "[" + ",".join(_fmt_skill_entry(e) for e in value) + "]"
    raise WireError(f"no formatter for field '{field}'")


def encode_message(msg: dict) -> str:
    """Serialize a message dict to its canonical single-line form."""
    mtype = msg.get("type")
    if mtype not in MESSAGE_FIELDS:
        raise WireError(f"unknown message type {mtype!r}")
    fields = MESSAGE_FIELDS[mtype]
    extra = set(msg) - set(fields)
    if extra:
        raise WireError(f"unexpected fields {sorted(extra)} for '{mtype}'")
    parts = []
    for field in fields:
        if field == "routed_from" and msg.get(field) is None:
            continue
        if field not in msg:
            raise WireError(f"'{mtype}' message missing field '{field}'")
        parts.append(f"{_fmt_str(field)}:{_fmt_value(field, msg[field])}")
    return "{" + ",".join(parts) + "}"


def decode_message(text: str) -> dict:
    """Parse and validate one message. Decoding is tolerant of float
    formatting; only structure and types are enforced."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WireError(f"not a JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise WireError("message must be a JSON object")
    mtype = doc.get("type")
    if mtype not in MESSAGE_FIELDS:
        raise WireError(f"unknown message type {mtype!r}")
    fields = MESSAGE_FIELDS[mtype]
    extra = set(doc) - set(fields)
    if extra:
        raise WireError(f"unexpected fields {sorted(extra)} for '{mtype}'")
    for field in fields:
        if field == "routed_from":
            continue
        if field not in doc:
            raise WireError(f"'{mtype}' message missing field '{field}'")
        _validate_type(field, doc[field])
    return doc


def _validate_type(field, value):
    if field in _FLOAT_FIELDS and not isinstance(value, (int, float)):
        raise WireError(f"field '{field}' must be a number")
    if field in _FLOAT_LIST_FIELDS:
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) for v in value
        ):
            raise WireError(f"field '{field}' must be a number list")
    if field in _INT_FIELDS and (isinstance(value, bool) or not isinstance(value, int)):
        raise WireError(f"field '{field}' must be an integer")
    if field in _STR_FIELDS and not isinstance(value, str):
        raise WireError(f"field '{field}' must be a string")
    if field == "skills":
        if not isinstance(value, list) or not value:
            raise WireError("hello.skills must be a non-empty list")
        for e in value:
            if not isinstance(e, dict):
                raise WireError("hello.skills entries must be objects")
            for k in ("skill_id", "name", "caption"):
                if k not in e:
                    raise WireError(f"skill entry missing '{k}'")


def state_message(t, root_pos, root_heading, joint_pos, active_skill, r_s,
                  routed_from=None) -> dict:
    msg = {
        "type": "state",
        "t": float(t),
        "root_pos": [float(v) for v in root_pos],
        "root_heading": float(root_heading),
        "joint_pos": [float(v) for v in joint_pos],
        "active_skill": int(active_skill),
        "r_s": float(r_s),
    }
    if routed_from is not None:
        msg["routed_from"] = routed_from
    return msg


def hello_message(labels) -> dict:
    return {
        "type": "hello",
        "skills": [
            {"skill_id": int(l.skill_id), "name": l.name, "caption": l.caption}
            for l in labels
        ],
    }


def error_message(code: str, detail: str) -> dict:
    return {"type": "error", "code": code, "detail": detail}
