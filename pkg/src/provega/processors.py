"""Iterative processors for process and mixed chunking.

Each processor advances one iteration at a time over the rows it has seen,
emitting keyed row changes plus per-iteration metrics. Instances are owned by
a single session and driven only from the scheduler loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .data_source import SYNTHETIC_ID_BASE, Row
from .errors import (
    InsufficientDataError,
    InvalidBinningError,
    ValidationError,
    ProcessorError,
)
from .rng import sample_indices

CONVERGENCE_EPS = 1e-9
DEFAULT_FIELDS = ("x", "y")
# Coarse-to-fine refinement levels get disjoint bin-id blocks.
_LEVEL_STRIDE = 1 << 30


@dataclass(frozen=True)
class IterationResult:
    """Row changes and metrics produced by one processor iteration."""

    inserts: tuple[Row, ...] = ()
    updates: tuple[Row, ...] = ()
    removes: tuple[int, ...] = ()
    metrics: dict = field(default_factory=dict)
    converged: bool = False

    def is_empty(self) -> bool:
        return not (self.inserts or self.updates or self.removes)


@dataclass(frozen=True)
class ProcessorDescriptor:
    name: str
    parameters: dict
    output_columns: tuple[str, ...]
    metrics: tuple[str, ...]


def _point(row: Row, x_field: str, y_field: str) -> tuple[float, float]:
    x = row.values.get(x_field)
    y = row.values.get(y_field)
    if isinstance(x, bool) or isinstance(y, bool) or \
            not isinstance(x, (int, float)) or not isinstance(y, (int, float)):
        raise ProcessorError(
            f"row {row.id} lacks numeric columns {x_field!r}/{y_field!r}"
        )
    return float(x), float(y)


def _check_output_columns(rows, output_columns):
    if rows:
        clash = set(output_columns) & set(rows[0].values)
        if clash:
            raise ProcessorError(
                f"source data already defines column(s) {sorted(clash)}"
            )


# --- k-means ------------------------------------------------------------------


class KMeansState:
    """Lloyd's algorithm, one iteration per call, over a growing row set.

    With emit_initial_inserts the first productive iteration emits every row
    as an insert (process chunking starts from an empty view); otherwise rows
    are assumed present and only changed assignments are emitted as updates.
    """

    name = "kmeans"
    output_columns = ("cluster",)
    metric_names = ("objective", "centroid_shift")

    def __init__(self, k: int, seed: int = 0,
                 fields: tuple[str, str] = DEFAULT_FIELDS,
                 max_iterations: int | None = None,
                 emit_initial_inserts: bool = True):
        if k < 1:
            raise ValidationError("k", f"expected an integer >= 1, got {k!r}")
        self.k = k
        self.seed = seed
        self.x_field, self.y_field = fields
        self.max_iterations = max_iterations
        self.emit_initial_inserts = emit_initial_inserts
        self.rows: dict[int, Row] = {}
        self.points: dict[int, tuple[float, float]] = {}
        self.assignment: dict[int, int] = {}
        self.centroids: list[tuple[float, float]] = []
        self.iteration = 0
        self.converged = False
        self._initial_emitted = False
        self._last_metrics: dict = {}

    def ingest(self, rows) -> None:
        """Buffer rows; they join the clustering at the next iteration."""
        _check_output_columns(rows, self.output_columns)
        if not rows:
            return
        for row in rows:
            pt = _point(row, self.x_field, self.y_field)
            self.rows[row.id] = row
            self.points[row.id] = pt
        if self.centroids:
            self.converged = False
        else:
            self._maybe_init()

    def prepare(self, rows) -> None:
        self.ingest(rows)
        if not self.centroids:
            raise InsufficientDataError(
                f"kmeans needs at least k={self.k} rows, got {len(self.points)}"
            )

    def _maybe_init(self):
        # Initial centroids are k distinct rows drawn by the session PRNG.
        if len(self.points) < self.k:
            return
        ids = sorted(self.points)
        chosen = sample_indices(len(ids), self.k, self.seed)
        self.centroids = [self.points[ids[i]] for i in chosen]

    def total_iterations(self) -> int | None:
        return self.max_iterations

    def iterate(self) -> IterationResult:
        if self.converged:
            return IterationResult(metrics=dict(self._last_metrics), converged=True)
        if not self.centroids:
            self._maybe_init()
            if not self.centroids:
                # Mixed chunking may not have k rows yet; wait, not an error.
                return IterationResult()
        previous = self.assignment
        previous_centroids = list(self.centroids)
        assignment = {
            i: self._nearest(pt, self.centroids)[0]
            for i, pt in self.points.items()
        }
        self._reseed_empty(assignment)
        self.centroids = self._means(assignment)
        self.assignment = assignment
        self.iteration += 1
        shift = max(
            math.dist(old, new)
            for old, new in zip(previous_centroids, self.centroids)
        )
        objective = 0.0
        for i, (x, y) in self.points.items():
            cx, cy = self.centroids[assignment[i]]
            objective += (x - cx) ** 2 + (y - cy) ** 2
        self.converged = shift < CONVERGENCE_EPS or (
            self.max_iterations is not None and self.iteration >= self.max_iterations
        )
        self._last_metrics = {"objective": objective, "centroid_shift": shift}

        changed = [i for i in sorted(assignment) if previous.get(i) != assignment[i]]
        rows = tuple(self._clustered_row(i) for i in changed)
        if self.emit_initial_inserts and not self._initial_emitted:
            self._initial_emitted = True
            return IterationResult(inserts=rows, metrics=dict(self._last_metrics),
                                   converged=self.converged)
        return IterationResult(updates=rows, metrics=dict(self._last_metrics),
                               converged=self.converged)

    def _clustered_row(self, row_id: int) -> Row:
        values = dict(self.rows[row_id].values)
        values["cluster"] = self.assignment[row_id]
        return Row(row_id, values)

    @staticmethod
    def _nearest(pt, centroids) -> tuple[int, float]:
        best, best_d = 0, math.inf
        for c, (cx, cy) in enumerate(centroids):
            d = (pt[0] - cx) ** 2 + (pt[1] - cy) ** 2
            if d < best_d:
                best, best_d = c, d
        return best, best_d

    def _reseed_empty(self, assignment: dict[int, int]) -> None:
        # An emptied cluster is reseeded to the point farthest from its
        # nearest centroid. Candidates are limited to clusters that keep at
        # least one member; ties break to the lowest row id.
        members: dict[int, int] = {}
        for c in assignment.values():
            members[c] = members.get(c, 0) + 1
        for c in range(self.k):
            if members.get(c, 0):
                continue
            farthest, farthest_d = None, -1.0
            for i in sorted(self.points):
                if members[assignment[i]] < 2:
                    continue
                _, d = self._nearest(self.points[i], self.centroids)
                if d > farthest_d:
                    farthest, farthest_d = i, d
            if farthest is None:
                continue
            members[assignment[farthest]] -= 1
            self.centroids[c] = self.points[farthest]
            assignment[farthest] = c
            members[c] = 1

    def _means(self, assignment: dict[int, int]) -> list[tuple[float, float]]:
        sums = [[0.0, 0.0, 0] for _ in range(self.k)]
        for i, c in assignment.items():
            x, y = self.points[i]
            acc = sums[c]
            acc[0] += x
            acc[1] += y
            acc[2] += 1
        return [
            (sx / n, sy / n) if n else self.centroids[c]
            for c, (sx, sy, n) in enumerate(sums)
        ]

    def snapshot(self):
        return (
            dict(self.rows),
            dict(self.assignment),
            list(self.centroids),
            self.iteration,
            self.converged,
            self._initial_emitted,
            dict(self._last_metrics),
        )

    def restore(self, snap) -> None:
        rows, assignment, centroids, iteration, converged, emitted, metrics = snap
        self.rows = dict(rows)
        self.points = {
            i: _point(r, self.x_field, self.y_field) for i, r in self.rows.items()
        }
        self.assignment = dict(assignment)
        self.centroids = list(centroids)
        self.iteration = iteration
        self.converged = converged
        self._initial_emitted = emitted
        self._last_metrics = dict(metrics)


def kmeans_init(rows, k: int, seed: int = 0, fields=DEFAULT_FIELDS,
                max_iterations: int | None = None) -> KMeansState:
    state = KMeansState(k=k, seed=seed, fields=tuple(fields),
                        max_iterations=max_iterations)
    state.prepare(list(rows))
    return state


def kmeans_iterate(state: KMeansState) -> IterationResult:
    return state.iterate()


# --- density grid ---------------------------------------------------------------


class DensityState:
    """2D bin counts: coarse-to-fine re-binning or incremental accumulation.

    refine=True re-bins everything at 2^t per side each iteration until the
    configured resolution is reached; refine=False counts newly ingested rows
    into the full-resolution grid and converges whenever it has caught up.
    """

    name = "density"
    output_columns = ("bin_x", "bin_y", "count")
    metric_names = ("stability",)

    def __init__(self, bins_x: int, bins_y: int,
                 fields: tuple[str, str] = DEFAULT_FIELDS, refine: bool = False):
        if not isinstance(bins_x, int) or isinstance(bins_x, bool) or bins_x < 1:
            raise InvalidBinningError("bins_x", f"expected >= 1, got {bins_x!r}")
        if not isinstance(bins_y, int) or isinstance(bins_y, bool) or bins_y < 1:
            raise InvalidBinningError("bins_y", f"expected >= 1, got {bins_y!r}")
        self.bins_x = bins_x
        self.bins_y = bins_y
        self.x_field, self.y_field = fields
        self.refine = refine
        self.points: dict[int, tuple[float, float]] = {}
        self.pending: list[int] = []
        self.extent: tuple[float, float, float, float] | None = None
        self.counts: dict[tuple[int, int], int] = {}
        self.level = 0
        self.iteration = 0
        self.converged = False
        self._prev_dist: dict[tuple[int, int], float] | None = None
        self._last_metrics: dict = {}

    def ingest(self, rows) -> None:
        _check_output_columns(rows, self.output_columns)
        if not rows:
            return
        for row in rows:
            self.points[row.id] = _point(row, self.x_field, self.y_field)
            self.pending.append(row.id)
        if not self.refine:
            self.converged = False

    def prepare(self, rows) -> None:
        self.ingest(rows)
        if self.refine and not self.points:
            raise InsufficientDataError("density refinement needs at least one row")

    def total_iterations(self) -> int | None:
        if not self.refine:
            return None
        side = max(self.bins_x, self.bins_y)
        return math.ceil(math.log2(side)) + 1 if side > 1 else 1

    def _resolution(self, level: int) -> tuple[int, int]:
        return min(2 ** level, self.bins_x), min(2 ** level, self.bins_y)

    def _freeze_extent(self):
        # Extent is fixed at first binning so bin identity stays stable;
        # rows arriving outside it clamp to the edge bins.
        if self.extent is None:
            xs = [p[0] for p in self.points.values()]
            ys = [p[1] for p in self.points.values()]
            self.extent = (min(xs), max(xs), min(ys), max(ys))

    def _bin_of(self, pt, rx: int, ry: int) -> tuple[int, int]:
        x0, x1, y0, y1 = self.extent
        span_x = x1 - x0
        span_y = y1 - y0
        bx = int((pt[0] - x0) / span_x * rx) if span_x > 0 else 0
        by = int((pt[1] - y0) / span_y * ry) if span_y > 0 else 0
        return min(max(bx, 0), rx - 1), min(max(by, 0), ry - 1)

    def iterate(self) -> IterationResult:
        if self.converged:
            return IterationResult(metrics=dict(self._last_metrics), converged=True)
        if not self.points:
            return IterationResult()
        self._freeze_extent()
        if self.refine:
            return self._iterate_refine()
        return self._iterate_incremental()

    def _iterate_refine(self) -> IterationResult:
        rx, ry = self._resolution(self.level)
        counts: dict[tuple[int, int], int] = {}
        for pt in self.points.values():
            b = self._bin_of(pt, rx, ry)
            counts[b] = counts.get(b, 0) + 1
        removes = tuple(
            self._bin_id(self.level - 1, b) for b in sorted(self.counts)
        ) if self.iteration else ()
        inserts = tuple(
            self._bin_row(self.level, b, counts[b]) for b in sorted(counts)
        )
        # Distributions at different resolutions are not comparable.
        self._stability(counts, same_grid=False)
        self.counts = counts
        self.pending.clear()
        at_cap = rx == self.bins_x and ry == self.bins_y
        self.level += 1
        self.iteration += 1
        self.converged = at_cap
        self._last_metrics = {}
        return IterationResult(inserts=inserts, removes=removes,
                               converged=self.converged)

    def _iterate_incremental(self) -> IterationResult:
        if not self.pending:
            self.converged = True
            self._last_metrics = {"stability": 1.0} if self._prev_dist else {}
            return IterationResult(metrics=dict(self._last_metrics), converged=True)
        rx, ry = self.bins_x, self.bins_y
        touched: dict[tuple[int, int], int] = {}
        for i in self.pending:
            b = self._bin_of(self.points[i], rx, ry)
            touched[b] = touched.get(b, 0) + 1
        self.pending.clear()
        inserts, updates = [], []
        for b in sorted(touched):
            fresh = b not in self.counts
            self.counts[b] = self.counts.get(b, 0) + touched[b]
            row = self._bin_row(0, b, self.counts[b])
            (inserts if fresh else updates).append(row)
        stability = self._stability(self.counts, same_grid=True)
        self.iteration += 1
        self._last_metrics = {} if stability is None else {"stability": stability}
        return IterationResult(inserts=tuple(inserts), updates=tuple(updates),
                               metrics=dict(self._last_metrics))

    def _stability(self, counts, same_grid: bool) -> float | None:
        total = sum(counts.values())
        dist = {b: c / total for b, c in counts.items()} if total else {}
        prev, self._prev_dist = self._prev_dist, dist
        if prev is None or not same_grid:
            return None
        l1 = sum(abs(dist.get(b, 0.0) - prev.get(b, 0.0))
                 for b in set(dist) | set(prev))
        return 1.0 - l1 / 2.0

    def _bin_id(self, level: int, b: tuple[int, int]) -> int:
        if self.refine:
            rx, _ = self._resolution(level)
            return SYNTHETIC_ID_BASE + level * _LEVEL_STRIDE + b[1] * rx + b[0]
        return SYNTHETIC_ID_BASE + b[1] * self.bins_x + b[0]

    def _bin_row(self, level: int, b: tuple[int, int], count: int) -> Row:
        return Row(self._bin_id(level, b),
                   {"bin_x": b[0], "bin_y": b[1], "count": count})

    def snapshot(self):
        return (
            dict(self.points),
            list(self.pending),
            self.extent,
            dict(self.counts),
            self.level,
            self.iteration,
            self.converged,
            dict(self._prev_dist) if self._prev_dist is not None else None,
            dict(self._last_metrics),
        )

    def restore(self, snap) -> None:
        (points, pending, extent, counts, level, iteration, converged,
         prev_dist, metrics) = snap
        self.points = dict(points)
        self.pending = list(pending)
        self.extent = extent
        self.counts = dict(counts)
        self.level = level
        self.iteration = iteration
        self.converged = converged
        self._prev_dist = dict(prev_dist) if prev_dist is not None else None
        self._last_metrics = dict(metrics)


def density_init(rows, bins_x: int, bins_y: int, fields=DEFAULT_FIELDS,
                 refine: bool = False) -> DensityState:
    state = DensityState(bins_x=bins_x, bins_y=bins_y, fields=tuple(fields),
                         refine=refine)
    state.prepare(list(rows))
    return state


def density_iterate(state: DensityState) -> IterationResult:
    return state.iterate()


# --- registry -------------------------------------------------------------------

_PATH = "provega.progression.chunking.processor"


def registered_names():
    return ("kmeans", "density")


def validate_parameters(name: str, params: dict, path: str = _PATH) -> dict:
    """Normalize a processor parameter map; unknown keys are path-bearing errors."""
    if name == "kmeans":
        _reject_unknown(path, params, {"k", "fields", "seed", "max_iterations"})
        out = {"k": _int_at_least(f"{path}.k", params.get("k"), 1)}
        out["fields"] = _fields(path, params.get("fields"))
        out["seed"] = _seed(path, params.get("seed", 0))
        if "max_iterations" in params:
            out["max_iterations"] = _int_at_least(
                f"{path}.max_iterations", params["max_iterations"], 1
            )
        return out
    if name == "density":
        _reject_unknown(path, params, {"bins_x", "bins_y", "fields"})
        out = {}
        for key in ("bins_x", "bins_y"):
            value = params.get(key)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValidationError(f"{path}.{key}",
                                      f"expected an integer, got {value!r}")
            if value < 1:
                raise InvalidBinningError(f"{path}.{key}",
                                          f"expected >= 1, got {value}")
            out[key] = value
        out["fields"] = _fields(path, params.get("fields"))
        return out
    raise ValidationError(f"{path}.name", f"unknown processor {name!r}")


def create(name: str, params: dict, chunking_type: str):
    """Instantiate a processor session for the given chunking strategy."""
    fields = tuple(params["fields"])
    if name == "kmeans":
        return KMeansState(
            k=params["k"],
            seed=params.get("seed", 0),
            fields=fields,
            max_iterations=params.get("max_iterations"),
            emit_initial_inserts=chunking_type == "process",
        )
    if name == "density":
        return DensityState(
            bins_x=params["bins_x"],
            bins_y=params["bins_y"],
            fields=fields,
            refine=chunking_type == "process",
        )
    raise ValidationError(f"{_PATH}.name", f"unknown processor {name!r}")


def describe(name: str, params: dict) -> ProcessorDescriptor:
    cls = KMeansState if name == "kmeans" else DensityState
    return ProcessorDescriptor(
        name=name,
        parameters=dict(params),
        output_columns=cls.output_columns,
        metrics=cls.metric_names,
    )


def _reject_unknown(path, params, allowed):
    for key in params:
        if key not in allowed:
            raise ValidationError(f"{path}.{key}", "unknown key")


def _int_at_least(path, value, minimum):
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ValidationError(path, f"expected an integer >= {minimum}, got {value!r}")
    return value


def _seed(path, value):
    if not isinstance(value, int) or isinstance(value, bool) or not (
        0 <= value < (1 << 64)
    ):
        raise ValidationError(f"{path}.seed",
                              "seed must be an unsigned 64-bit integer")
    return value


def _fields(path, value):
    if value is None:
        return list(DEFAULT_FIELDS)
    if not (isinstance(value, list) and len(value) == 2
            and all(isinstance(f, str) and f for f in value)):
        raise ValidationError(f"{path}.fields",
                              "expected a list of two column names")
    return list(value)
