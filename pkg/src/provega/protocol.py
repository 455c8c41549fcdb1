"""Wire protocol: engine<->client and generator<->engine message catalog.

Every message is one JSON object per WebSocket text frame. Serialization is
compact and preserves construction order so fixture files compare bit-exactly.
"""

from __future__ import annotations

import json

from .data_source import Row
from .errors import ProtocolError
from .scheduler import Emission
from .store import ChangeReport, Changeset

DEFAULT_PORT = 7878
SESSION_PATH = "/session"
INGEST_PATH = "/ingest"

ENGINE_TO_CLIENT = ("hello", "changeset", "status", "snapshot", "error")
CLIENT_TO_ENGINE = ("control", "set", "snapshot_request")
GENERATOR_TO_ENGINE = ("chunk", "end")
ENGINE_TO_GENERATOR = ("ack", "error")


def serialize_message(message: dict) -> str:
    """One frame's payload; compact separators, construction order kept."""
    return json.dumps(message, separators=(",", ":"), allow_nan=False)


def parse_message(text: str) -> dict:
    """Validate one inbound frame; unknown fields are preserved untouched."""
    try:
        message = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"frame is not valid JSON: {e}") from e
    if not isinstance(message, dict):
        raise ProtocolError("frame must carry a JSON object")
    mtype = message.get("type")
    if not isinstance(mtype, str):
        raise ProtocolError("missing message field 'type'")
    validator = _VALIDATORS.get(mtype)
    if validator is None:
        raise ProtocolError(f"unknown message type {mtype!r}")
    validator(message)
    return message


# --- constructors (engine -> client) ------------------------------------------


def hello_message(spec_document: dict, columns: list[str],
                  total_rows: int | None = None) -> dict:
    message = {"type": "hello", "spec": spec_document, "columns": list(columns)}
    if total_rows is not None:
        message["total_rows"] = total_rows
    return message


def row_to_wire(row: Row) -> dict:
    return {"id": row.id, "values": dict(row.values)}


def row_from_wire(obj: dict) -> Row:
    return Row(obj["id"], dict(obj["values"]))


def report_to_json(report: ChangeReport | None) -> dict | None:
    if report is None or (not report.changed_ids and report.changed_area is None):
        return None
    area = None
    if report.changed_area is not None:
        r = report.changed_area
        area = {"x0": r.x0, "x1": r.x1, "y0": r.y0, "y1": r.y1}
    return {
        "changed_ids": list(report.changed_ids),
        "changed_area": area,
        "highlight_duration": report.highlight_duration,
    }


def changeset_message(emission: Emission) -> dict:
    cs = emission.changeset
    return {
        "type": "changeset",
        "step": cs.step,
        "direction": cs.direction,
        "insert": [row_to_wire(r) for r in cs.inserts],
        "update": [row_to_wire(r) for r in cs.updates],
        "remove": list(cs.removes),
        "quality": emission.sample.to_json() if emission.sample else None,
        "change_report": report_to_json(emission.report),
    }


def catchup_message(step: int, rows: list[Row], sample) -> dict:
    """State replay for a client joining mid-session, framed as inserts."""
    return {
        "type": "changeset",
        "step": step,
        "direction": "forward",
        "insert": [row_to_wire(r) for r in rows],
        "update": [],
        "remove": [],
        "quality": sample.to_json() if sample else None,
        "change_report": None,
    }


def status_message(status: str, alive: bool, warning: str | None = None) -> dict:
    message = {"type": "status", "status": status, "alive": alive}
    if warning is not None:
        message["warning"] = warning
    return message


def snapshot_message(spec_document: dict) -> dict:
    return {"type": "snapshot", "spec": spec_document}


def error_message(message: str, path: str | None = None) -> dict:
    out = {"type": "error", "message": message}
    if path is not None:
        out["path"] = path
    return out


# --- constructors (client -> engine) -------------------------------------------


def control_message(action: str, params: dict | None = None) -> dict:
    message = {"type": "control", "action": action}
    if params:
        message["params"] = params
    return message


def set_message(key: str, value) -> dict:
    return {"type": "set", "key": key, "value": value}


def snapshot_request_message() -> dict:
    return {"type": "snapshot_request"}


# --- constructors (generator <-> engine) ----------------------------------------


def chunk_message(batch: int, rows: list[dict]) -> dict:
    return {"type": "chunk", "batch": batch, "rows": rows}


def end_message() -> dict:
    return {"type": "end"}


def ack_message(batch: int) -> dict:
    return {"type": "ack", "batch": batch}


# --- validation -----------------------------------------------------------------


def _require(message: dict, name: str, kinds, kind_label: str):
    if name not in message:
        raise ProtocolError(f"missing message field {name!r}",
                            path=message.get("type"))
    value = message[name]
    ok = isinstance(value, kinds)
    if ok and isinstance(value, bool) and kinds is not bool:
        ok = False
    if not ok:
        raise ProtocolError(f"field {name!r} must be {kind_label}",
                            path=message.get("type"))
    return value


def _validate_wire_rows(message, rows):
    for r in rows:
        if not isinstance(r, dict) or "id" not in r or "values" not in r:
            raise ProtocolError("changeset rows need 'id' and 'values'",
                                path=message.get("type"))


def _validate_hello(m):
    _require(m, "spec", dict, "an object")
    columns = _require(m, "columns", list, "a list")
    if not all(isinstance(c, str) for c in columns):
        raise ProtocolError("field 'columns' must list column names", path="hello")


def _validate_changeset(m):
    _require(m, "step", int, "an integer")
    direction = _require(m, "direction", str, "a string")
    if direction not in ("forward", "backward"):
        raise ProtocolError(f"unknown direction {direction!r}", path="changeset")
    _validate_wire_rows(m, _require(m, "insert", list, "a list"))
    _validate_wire_rows(m, _require(m, "update", list, "a list"))
    removes = _require(m, "remove", list, "a list")
    if not all(isinstance(i, int) for i in removes):
        raise ProtocolError("field 'remove' must list row ids", path="changeset")
    if "quality" not in m or "change_report" not in m:
        raise ProtocolError("missing message field 'quality' or 'change_report'",
                            path="changeset")


def _validate_status(m):
    _require(m, "status", str, "a string")
    _require(m, "alive", bool, "a boolean")


def _validate_snapshot(m):
    _require(m, "spec", dict, "an object")


def _validate_error(m):
    _require(m, "message", str, "a string")


def _validate_control(m):
    _require(m, "action", str, "a string")
    if "params" in m and not isinstance(m["params"], dict):
        raise ProtocolError("field 'params' must be an object", path="control")


def _validate_set(m):
    _require(m, "key", str, "a string")
    if "value" not in m:
        raise ProtocolError("missing message field 'value'", path="set")


def _validate_snapshot_request(m):
    pass


def _validate_chunk(m):
    _require(m, "batch", int, "an integer")
    rows = _require(m, "rows", list, "a list")
    if not all(isinstance(r, dict) for r in rows):
        raise ProtocolError("field 'rows' must list value objects", path="chunk")


def _validate_end(m):
    pass


def _validate_ack(m):
    _require(m, "batch", int, "an integer")


_VALIDATORS = {
    "hello": _validate_hello,
    "changeset": _validate_changeset,
    "status": _validate_status,
    "snapshot": _validate_snapshot,
    "error": _validate_error,
    "control": _validate_control,
    "set": _validate_set,
    "snapshot_request": _validate_snapshot_request,
    "chunk": _validate_chunk,
    "end": _validate_end,
    "ack": _validate_ack,
}


def trace_line(emission: Emission) -> dict:
    """One structured trace record per client emission."""
    cs = emission.changeset
    return {
        "step": cs.step,
        "t_ms": emission.t_ms,
        "counts": {
            "inserts": len(cs.inserts),
            "updates": len(cs.updates),
            "removes": len(cs.removes),
        },
        "quality": emission.sample.to_json() if emission.sample else None,
        "change_report": report_to_json(emission.report),
    }
