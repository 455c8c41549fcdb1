"""Row ingestion from inline values, CSV/JSON files, and generator streams.

Complete inputs (inline, file) are loaded eagerly and buffered so the
progression can begin empty. Progressive inputs arrive as generator chunks
over the wire protocol; only the descriptor lives here.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .errors import EmptyDatasetError, FormatError, IoError, ValidationError

Value = Union[int, float, str, bool, None]

# Engine-assigned ids at or above this mark belong to processor output rows
# (density bins), never to source data rows.
SYNTHETIC_ID_BASE = 1 << 40

_INT_RE = re.compile(r"^[+-]?[0-9]+$")
_FLOAT_RE = re.compile(r"^[+-]?([0-9]+\.?[0-9]*|\.[0-9]+)([eE][+-]?[0-9]+)?$")


@dataclass(frozen=True)
class Row:
    """One dataset record with its stable engine id."""

    id: int
    values: dict

    def is_data_row(self) -> bool:
        return self.id < SYNTHETIC_ID_BASE


@dataclass(frozen=True)
class DataSourceDescriptor:
    """Where rows come from: inline records, a local file, or a WebSocket."""

    kind: str  # inline | file | websocket
    records: tuple = ()
    path: str | None = None
    format: str | None = None  # csv | json
    url: str | None = None
    declared_row_count: int | None = None

    @property
    def is_progressive(self) -> bool:
        return self.kind == "websocket"


def inline_source(records) -> DataSourceDescriptor:
    return DataSourceDescriptor(
        kind="inline", records=tuple(records), declared_row_count=len(records)
    )


def file_source(path: str, format: str | None = None) -> DataSourceDescriptor:
    if format is None:
        suffix = Path(path).suffix.lower()
        format = {".csv": "csv", ".json": "json"}.get(suffix)
        if format is None:
            raise ValidationError("data", f"cannot infer format from {path!r}")
    if format not in ("csv", "json"):
        raise ValidationError("data", f"unsupported file format {format!r}")
    return DataSourceDescriptor(kind="file", path=path, format=format)


def websocket_source(url: str) -> DataSourceDescriptor:
    return DataSourceDescriptor(kind="websocket", url=url)


def descriptor_from_document(base_view: dict, data_override: str | None = None):
    """Derive the source from the host document's data block.

    `data_override` (a CLI-supplied path) wins over the embedded block.
    Returns None when the document names no data source at all.
    """
    if data_override is not None:
        return file_source(data_override)
    data = base_view.get("data")
    if not isinstance(data, dict):
        return None
    if "values" in data:
        values = data["values"]
        if not isinstance(values, list):
            raise ValidationError("data.values", "inline values must be an array")
        return inline_source(values)
    url = data.get("url")
    if isinstance(url, str):
        if url.startswith(("ws://", "wss://")):
            return websocket_source(url)
        return file_source(url)
    return None


def load_complete(descriptor: DataSourceDescriptor):
    """Materialize a complete input as (rows, header).

    Rows carry ids 0..n-1 in source order; the header lists column names in
    first-seen order. Raises EmptyDatasetError for zero data rows.
    """
    if descriptor.kind == "inline":
        records = [dict(r) for r in descriptor.records]
        rows, header = _rows_from_records(records)
    elif descriptor.kind == "file":
        assert descriptor.path is not None
        try:
            text = Path(descriptor.path).read_text(encoding="utf-8")
        except OSError as e:
            raise IoError(f"cannot read {descriptor.path}: {e}") from e
        if descriptor.format == "csv":
            rows, header = _parse_csv(text)
        else:
            rows, header = _parse_json_records(text)
    else:
        raise ValidationError("data", "progressive sources are not loaded eagerly")
    if not rows:
        raise EmptyDatasetError("data source yielded 0 rows")
    return rows, header


def open_progressive(descriptor: DataSourceDescriptor, *, ack_window: int = 1,
                     max_buffer_rows: int | None = None):
    """Open the generator chunk stream for a WebSocket source.

    Returns a feed handle (see protocol.GeneratorFeed) that yields committed
    batches and exposes the ACK hook. Network errors surface as ConnectError.
    """
    from .server import connect_generator  # transport lives with the endpoints

    if descriptor.kind != "websocket":
        raise ValidationError("data", "open_progressive requires a websocket source")
    return connect_generator(descriptor.url, ack_window=ack_window,
                             max_buffer_rows=max_buffer_rows)


def _rows_from_records(records):
    header: list[str] = []
    seen = set()
    for rec in records:
        if not isinstance(rec, dict):
            raise FormatError(records.index(rec), "record is not an object")
        for k in rec:
            if k not in seen:
                seen.add(k)
                header.append(k)
    normalized = _promote_numeric_columns(records, header)
    rows = [Row(i, {k: rec.get(k) for k in header}) for i, rec in enumerate(normalized)]
    return rows, header


def _promote_numeric_columns(records, header):
    # A column mixing ints and floats is read as float throughout.
    for col in header:
        vals = [r.get(col) for r in records]
        has_float = any(isinstance(v, float) for v in vals)
        has_int = any(isinstance(v, int) and not isinstance(v, bool) for v in vals)
        if has_float and has_int:
            for r in records:
                v = r.get(col)
                if isinstance(v, int) and not isinstance(v, bool):
                    r[col] = float(v)
    return records


def _parse_csv(text: str):
    import csv
    import io

    reader = csv.reader(io.StringIO(text))
    try:
        table = list(reader)
    except csv.Error as e:
        raise FormatError(getattr(reader, "line_num", 0), str(e)) from e
    if not table:
        raise EmptyDatasetError("empty file")
    header = table[0]
    if len(set(header)) != len(header):
        raise FormatError(1, "duplicate column names in header")
    data = table[1:]
    for i, rec in enumerate(data):
        if len(rec) != len(header):
            raise FormatError(i + 2, f"expected {len(header)} fields, got {len(rec)}")
    columns = {name: [rec[j] for rec in data] for j, name in enumerate(header)}
    typed = {name: _infer_column(vals) for name, vals in columns.items()}
    rows = [
        Row(i, {name: typed[name][i] for name in header}) for i in range(len(data))
    ]
    return rows, list(header)


def _infer_column(raw: list[str]) -> list[Value]:
    """Apply integer -> float -> boolean -> string inference to one column.

    Empty cells are null and do not participate in inference, which makes the
    result independent of row order.
    """
    present = [v for v in raw if v != ""]
    if present and all(_INT_RE.match(v) for v in present):
        return [int(v) if v != "" else None for v in raw]
    if present and all(_FLOAT_RE.match(v) for v in present):
        return [float(v) if v != "" else None for v in raw]
    if present and all(v in ("true", "false") for v in present):
        return [(v == "true") if v != "" else None for v in raw]
    return [v if v != "" else None for v in raw]


def _parse_json_records(text: str):
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(e.lineno, e.msg) from e
    if not isinstance(payload, list):
        raise FormatError(1, "expected a top-level array of objects")
    if not payload:
        raise EmptyDatasetError("empty file")
    for i, rec in enumerate(payload):
        if not isinstance(rec, dict):
            raise FormatError(i, "record is not an object")
    return _rows_from_records(payload)
