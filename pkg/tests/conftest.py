"""Shared builders, drivers, and brute-force oracles for the test suite."""

from __future__ import annotations

import json
import math

from provega.clock import VirtualClock
from provega.data_source import descriptor_from_document, load_complete
from provega.scheduler import Emission, Session, run_to_completion
from provega.spec_model import ProvegaSpec, normalize_document

# --- document builders ---------------------------------------------------------


def point_values(n: int, seed: int = 1) -> list[dict]:
    """n deterministic (x, y) records spread over a unit-ish square."""
    out = []
    state = seed & 0xFFFFFFFF
    for _ in range(n):
        state = (1103515245 * state + 12345) & 0x7FFFFFFF
        x = (state % 10_000) / 10_000
        state = (1103515245 * state + 12345) & 0x7FFFFFFF
        y = (state % 10_000) / 10_000
        out.append({"x": round(x, 6), "y": round(y, 6)})
    return out


def data_doc(values: list[dict], *, method: str = "ascending", chunk_size: int = 2,
             frequency: int = 250, seed: int | None = None,
             control: dict | None = None, monitoring: dict | None = None,
             encoding: dict | None = None) -> dict:
    reading: dict = {"method": method, "chunk_size": chunk_size,
                     "frequency": frequency}
    if seed is not None:
        reading["seed"] = seed
    provega: dict = {
        "progression": {"chunking": {"type": "data", "reading": reading}}
    }
    if control is not None:
        provega["progression"]["control"] = control
    if monitoring is not None:
        provega["progression"]["monitoring"] = monitoring
    doc: dict = {"data": {"values": values}, "mark": "point"}
    doc["encoding"] = encoding if encoding is not None else {
        "x": {"field": "x", "type": "quantitative"},
        "y": {"field": "y", "type": "quantitative"},
    }
    doc["provega"] = provega
    return doc


def processor_doc(values: list[dict], *, chunking_type: str,
                  processor: dict, reading: dict | None = None,
                  control: dict | None = None, monitoring: dict | None = None,
                  encoding: dict | None = None) -> dict:
    chunking: dict = {"type": chunking_type, "processor": processor}
    if reading is not None:
        chunking["reading"] = reading
    provega: dict = {"progression": {"chunking": chunking}}
    if control is not None:
        provega["progression"]["control"] = control
    if monitoring is not None:
        provega["progression"]["monitoring"] = monitoring
    doc: dict = {"data": {"values": values}, "mark": "point"}
    doc["encoding"] = encoding if encoding is not None else {
        "x": {"field": "x", "type": "quantitative"},
        "y": {"field": "y", "type": "quantitative"},
    }
    doc["provega"] = provega
    return doc


def ws_doc(url: str = "ws://127.0.0.1:1/feed", *, chunking_type: str = "data",
           processor: dict | None = None, control: dict | None = None,
           monitoring: dict | None = None) -> dict:
    chunking: dict = {"type": chunking_type}
    if processor is not None:
        chunking["processor"] = processor
    provega: dict = {"progression": {"chunking": chunking}}
    if control is not None:
        provega["progression"]["control"] = control
    if monitoring is not None:
        provega["progression"]["monitoring"] = monitoring
    return {
        "data": {"url": url},
        "mark": "point",
        "encoding": {
            "x": {"field": "x", "type": "quantitative"},
            "y": {"field": "y", "type": "quantitative"},
        },
        "provega": provega,
    }


def parse_doc(doc: dict) -> ProvegaSpec:
    # Round-trip through text so tests exercise exactly what files would carry.
    return normalize_document(json.loads(json.dumps(doc)))


# --- session drivers ------------------------------------------------------------


def make_session(doc: dict) -> Session:
    spec = parse_doc(doc)
    descriptor = descriptor_from_document(spec.base_view)
    rows, header = load_complete(descriptor)
    return Session(spec, rows=rows, header=header, complete_input=True)


def run_doc(doc: dict, *, clock: VirtualClock | None = None
            ) -> list[tuple[str, object]]:
    session = make_session(doc)
    return run_to_completion(session, clock or VirtualClock())


def changeset_emissions(events: list[tuple[str, object]]) -> list[Emission]:
    return [payload for kind, payload in events if kind == "changeset"]


def status_events(events: list[tuple[str, object]]) -> list[dict]:
    return [payload for kind, payload in events if kind == "status"]


# --- brute-force oracles -----------------------------------------------------------


def apply_naive(state: dict[int, dict], changeset) -> dict[int, dict]:
    """Reference changeset application over plain id -> values maps."""
    out = {i: dict(v) for i, v in state.items()}
    for row in changeset.inserts:
        assert row.id not in out, f"insert collides with id {row.id}"
        out[row.id] = dict(row.values)
    for row in changeset.updates:
        assert row.id in out, f"update of unknown id {row.id}"
        out[row.id] = dict(row.values)
    for row_id in changeset.removes:
        assert row_id in out, f"remove of unknown id {row_id}"
        del out[row_id]
    return out


def diff_states(before: dict[int, dict], after: dict[int, dict]) -> set[int]:
    """Ids inserted or updated between two states (removals excluded)."""
    changed = set()
    for i, values in after.items():
        if i not in before or before[i] != values:
            changed.add(i)
    return changed


def bbox_naive(before: dict[int, dict], after: dict[int, dict],
               changed: set[int], x_field: str, y_field: str
               ) -> tuple[float, float, float, float] | None:
    """Bounding box over changed rows' old and new positions, numeric only."""
    xs: list[float] = []
    ys: list[float] = []

    def collect(values: dict | None):
        if values is None:
            return
        x, y = values.get(x_field), values.get(y_field)
        if isinstance(x, bool) or isinstance(y, bool):
            return
        if isinstance(x, (int, float)) and isinstance(y, (int, float)):
            xs.append(float(x))
            ys.append(float(y))

    for i in sorted(changed):
        collect(after.get(i))
        if i in before:
            collect(before.get(i))
    if not xs:
        return None
    return (min(xs), max(xs), min(ys), max(ys))


def lloyd_reference(points: list[tuple[float, float]],
                    centroids: list[tuple[float, float]],
                    max_iterations: int = 10_000,
                    eps: float = 1e-9) -> tuple[list[tuple[float, float]], float, int]:
    """Batch Lloyd iterations from a given init; returns (centroids, sse, iters).

    Mirrors the documented engine rules: Euclidean assignment with ties to the
    lowest centroid index, empty clusters reseeded to the point farthest from
    its nearest centroid among clusters that keep at least one member.
    """
    cents = [tuple(c) for c in centroids]
    iterations = 0
    for _ in range(max_iterations):
        iterations += 1
        prev = list(cents)
        assign = [_nearest(p, cents)[0] for p in points]
        counts = [0] * len(cents)
        for a in assign:
            counts[a] += 1
        for ci in range(len(cents)):
            if counts[ci] == 0:
                far_idx, far_d = None, -1.0
                for pi, p in enumerate(points):
                    if counts[assign[pi]] <= 1:
                        continue
                    d = _nearest(p, cents)[1]
                    if d > far_d:
                        far_idx, far_d = pi, d
                if far_idx is None:
                    continue
                counts[assign[far_idx]] -= 1
                assign[far_idx] = ci
                counts[ci] = 1
                cents[ci] = points[far_idx]
        sums = [[0.0, 0.0] for _ in cents]
        for p, a in zip(points, assign):
            sums[a][0] += p[0]
            sums[a][1] += p[1]
        new = []
        shift = 0.0
        for ci, c in enumerate(cents):
            if counts[ci]:
                nc = (sums[ci][0] / counts[ci], sums[ci][1] / counts[ci])
            else:
                nc = c
            shift = max(shift, math.dist(prev[ci], nc))
            new.append(nc)
        cents = new
        if shift < eps:
            break
    sse = sum(_nearest(p, cents)[1] for p in points)
    return cents, sse, iterations


def _nearest(p: tuple[float, float], cents: list[tuple[float, float]]
             ) -> tuple[int, float]:
    best, best_d = 0, math.inf
    for ci, c in enumerate(cents):
        d = (p[0] - c[0]) ** 2 + (p[1] - c[1]) ** 2
        if d < best_d:
            best, best_d = ci, d
    return best, best_d
