"""Changeset bookkeeping: the materialized row set and its undo history."""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass, field

from .data_source import Row, Value
from .errors import ConflictError, EmptyHistoryError, HistoryEvictedError

HISTORY_CAPACITY = 256


@dataclass(frozen=True)
class Changeset:
    """One atomic delta against the materialized rows.

    `updates` carries full replacement rows keyed by id; inserts and removes
    are disjoint from updates and from each other within one changeset.
    """

    step: int
    direction: str  # forward | backward
    inserts: tuple[Row, ...] = ()
    updates: tuple[Row, ...] = ()
    removes: tuple[int, ...] = ()

    def is_empty(self) -> bool:
        return not (self.inserts or self.updates or self.removes)

    def changed_ids(self) -> list[int]:
        # Inserted and updated ids only; removed ids are not "changed marks".
        ids = {r.id for r in self.inserts}
        ids.update(r.id for r in self.updates)
        return sorted(ids)


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float


@dataclass(frozen=True)
class ChangeReport:
    changed_ids: tuple[int, ...] = ()
    changed_area: Rect | None = None
    highlight_duration: int | None = None


@dataclass
class HistoryEntry:
    forward: Changeset
    inverse: Changeset
    snapshot: object = None  # opaque processor state captured before the step


class ChangesetStore:
    """Rows plus a bounded inverse-changeset history.

    History keeps the most recent HISTORY_CAPACITY entries; stepping back past
    an evicted entry raises HistoryEvictedError, while stepping back on a
    pristine store raises EmptyHistoryError.
    """

    def __init__(self, capacity: int = HISTORY_CAPACITY):
        self.rows: dict[int, Row] = {}
        self.capacity = capacity
        self._history: list[HistoryEntry] = []
        self._evicted = 0
        self._steps_applied = 0

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def step_count(self) -> int:
        return self._steps_applied

    @property
    def history_depth(self) -> int:
        return len(self._history)

    @property
    def evicted_count(self) -> int:
        return self._evicted

    def get(self, row_id: int) -> Row | None:
        return self.rows.get(row_id)

    def snapshot_rows(self) -> list[Row]:
        return [self.rows[i] for i in sorted(self.rows)]

    def apply(self, changeset: Changeset, snapshot: object = None) -> Changeset:
        """Apply a forward changeset; record and return its inverse.

        Preconditions (ConflictError): inserts must be new ids, updates and
        removes must hit existing ids, and the three id sets must be disjoint.
        """
        self._check(changeset)
        inverse_inserts = tuple(self.rows[i] for i in changeset.removes)
        inverse_updates = tuple(self.rows[r.id] for r in changeset.updates)
        inverse_removes = tuple(r.id for r in changeset.inserts)
        inverse = Changeset(
            step=changeset.step,
            direction="backward",
            inserts=inverse_inserts,
            updates=inverse_updates,
            removes=inverse_removes,
        )
        for r in changeset.inserts:
            self.rows[r.id] = r
        for r in changeset.updates:
            self.rows[r.id] = r
        for i in changeset.removes:
            del self.rows[i]
        self._history.append(HistoryEntry(changeset, inverse, snapshot))
        if len(self._history) > self.capacity:
            self._history.pop(0)
            self._evicted += 1
        self._steps_applied += 1
        return inverse

    def invert_last(self) -> HistoryEntry:
        """Pop the newest history entry and apply its inverse to the rows."""
        if not self._history:
            if self._evicted:
                raise HistoryEvictedError(
                    f"history exhausted: {self._evicted} older step(s) evicted "
                    f"(capacity {self.capacity})"
                )
            raise EmptyHistoryError("nothing to step back over")
        entry = self._history.pop()
        inverse = entry.inverse
        for i in inverse.removes:
            del self.rows[i]
        for r in inverse.inserts:
            self.rows[r.id] = r
        for r in inverse.updates:
            self.rows[r.id] = r
        self._steps_applied -= 1
        return entry

    def last_snapshot(self) -> object:
        return self._history[-1].snapshot if self._history else None

    def _check(self, cs: Changeset):
        insert_ids = {r.id for r in cs.inserts}
        update_ids = {r.id for r in cs.updates}
        remove_ids = set(cs.removes)
        if len(insert_ids) != len(cs.inserts):
            raise ConflictError("duplicate ids among inserts")
        if len(update_ids) != len(cs.updates):
            raise ConflictError("duplicate ids among updates")
        if len(remove_ids) != len(cs.removes):
            raise ConflictError("duplicate ids among removes")
        overlap = (insert_ids & update_ids) | (insert_ids & remove_ids) | (
            update_ids & remove_ids
        )
        if overlap:
            raise ConflictError(f"ids in multiple roles: {sorted(overlap)[:5]}")
        stale = insert_ids & self.rows.keys()
        if stale:
            raise ConflictError(f"insert of existing ids: {sorted(stale)[:5]}")
        missing = (update_ids | remove_ids) - self.rows.keys()
        if missing:
            raise ConflictError(f"update/remove of unknown ids: {sorted(missing)[:5]}")


class ChangeDetector:
    """Derives per-changeset change reports for mark and area highlighting."""

    def __init__(self, x_field: str | None, y_field: str | None,
                 mark_enabled: bool, area_enabled: bool,
                 highlight_duration: int):
        self.x_field = x_field
        self.y_field = y_field
        self.mark_enabled = mark_enabled
        self.area_enabled = area_enabled and x_field is not None and y_field is not None
        self.highlight_duration = highlight_duration
        self._warned = False
        if area_enabled and not self.area_enabled:
            _warnings.warn(
                "change.area requires numeric x and y encodings; reporting ids only",
                stacklevel=2,
            )
            self._warned = True

    def report(self, before: dict[int, Row], changeset: Changeset) -> ChangeReport:
        if not (self.mark_enabled or self.area_enabled):
            return ChangeReport()
        ids = tuple(changeset.changed_ids())
        area = None
        if self.area_enabled and ids:
            area = self._bounding_box(before, changeset)
        return ChangeReport(
            changed_ids=ids if self.mark_enabled else (),
            changed_area=area,
            highlight_duration=self.highlight_duration,
        )

    def _bounding_box(self, before: dict[int, Row],
                      changeset: Changeset) -> Rect | None:
        # Old and new positions of every touched row both count as changed.
        xs: list[float] = []
        ys: list[float] = []

        def collect(row: Row | None):
            if row is None:
                return
            x = row.values.get(self.x_field)
            y = row.values.get(self.y_field)
            if isinstance(x, (int, float)) and not isinstance(x, bool) and \
                    isinstance(y, (int, float)) and not isinstance(y, bool):
                xs.append(float(x))
                ys.append(float(y))

        for r in changeset.inserts:
            collect(r)
        for r in changeset.updates:
            collect(r)
            collect(before.get(r.id))
        if not xs:
            return None
        return Rect(x0=min(xs), x1=max(xs), y0=min(ys), y1=max(ys))


def encoding_fields(base_view: dict) -> tuple[str | None, str | None]:
    """Pull the x/y field names out of a host document's encoding block."""
    enc = base_view.get("encoding")
    if not isinstance(enc, dict):
        return None, None

    def field_of(channel):
        spec = enc.get(channel)
        if isinstance(spec, dict):
            f = spec.get("field")
            if isinstance(f, str) and f:
                return f
        return None

    return field_of("x"), field_of("y")


def detector_from_spec(spec) -> ChangeDetector:
    change = spec.progression.monitoring.change
    x_field, y_field = encoding_fields(spec.base_view)
    duration = max(
        change.mark.highlight_duration if change.mark.enabled else 0,
        change.area.highlight_duration if change.area.enabled else 0,
    ) or None
    return ChangeDetector(
        x_field=x_field,
        y_field=y_field,
        mark_enabled=change.mark.enabled,
        area_enabled=change.area.enabled,
        highlight_duration=duration,
    )
