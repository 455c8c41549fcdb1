"""Progression state machine: chunk planning, cadence, steering, coalescing.

One Session owns one progression. All mutations (ticks, controls, parameter
changes, generator feeds) must be invoked from a single driver loop; drivers
collect outbound events from the session outbox.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import processors as processor_registry
from .data_source import Row
from .errors import (
    IllegalTransitionError,
    InvalidPlanError,
    ProcessorError,
    ValidationError,
)
from .quality import QualitySample, QualityTracker
from .rng import shuffled
from .spec_model import DEFAULT_FREQUENCY_MS, ProvegaSpec, ReadingConfig
from .store import Changeset, ChangeReport, ChangesetStore, detector_from_spec

IDLE, RUNNING, PAUSED, DONE, STOPPED = "idle", "running", "paused", "done", "stopped"
ACTIONS = ("play", "pause", "stop", "step_forward", "step_backward")


@dataclass(frozen=True)
class ChunkPlan:
    chunks: tuple[tuple[int, ...], ...]
    method: str
    chunk_size: int
    seed: int

    def flat(self) -> list[int]:
        return [i for chunk in self.chunks for i in chunk]


def plan_chunks(n: int, reading: ReadingConfig) -> ChunkPlan:
    """Partition row ids 0..n-1 into ordered chunks per the reading method."""
    if n < 1:
        raise InvalidPlanError(f"cannot plan for {n} rows")
    if reading.chunk_size < 1:
        raise InvalidPlanError(f"cannot plan chunks of {reading.chunk_size}")
    if reading.method == "ascending":
        ids = list(range(n))
    elif reading.method == "descending":
        ids = list(range(n - 1, -1, -1))
    else:
        ids = shuffled(n, reading.seed)
    size = reading.chunk_size
    chunks = tuple(tuple(ids[i:i + size]) for i in range(0, n, size))
    return ChunkPlan(chunks=chunks, method=reading.method, chunk_size=size,
                     seed=reading.seed)


def _split(ids: list[int], size: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(ids[i:i + size]) for i in range(0, len(ids), size))


def merge_changesets(a: Changeset, b: Changeset) -> Changeset:
    """Net effect of applying a then b, as a single changeset.

    Later updates supersede earlier ones; an update folds into a same-window
    insert; a remove cancels a same-window insert; an insert after a remove
    nets out to an update of the pre-window row.
    """
    inserts = {r.id: r for r in a.inserts}
    updates = {r.id: r for r in a.updates}
    removes = dict.fromkeys(a.removes)
    for r in b.inserts:
        if r.id in removes:
            del removes[r.id]
            updates[r.id] = r
        else:
            inserts[r.id] = r
    for r in b.updates:
        if r.id in inserts:
            inserts[r.id] = r
        else:
            updates[r.id] = r
    for i in b.removes:
        if i in inserts:
            del inserts[i]
        else:
            updates.pop(i, None)
            removes[i] = None
    return Changeset(
        step=b.step,
        direction="forward",
        inserts=tuple(inserts.values()),
        updates=tuple(updates.values()),
        removes=tuple(removes),
    )


@dataclass(frozen=True)
class Emission:
    """One client-facing delta: merged changeset, report, latest sample."""

    changeset: Changeset
    report: ChangeReport | None
    sample: QualitySample | None
    t_ms: int


@dataclass(frozen=True)
class SessionState:
    status: str
    step: int
    total_steps: int | None
    rows_emitted: int
    started_at: int | None
    last_emit_at: int | None
    emit_count: int
    emit_interval_mean: float | None
    emit_interval_variance: float | None
    mode: str


class _EmitStats:
    """Welford running statistics over inter-emission gaps."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def push(self, gap_ms: float):
        self.count += 1
        delta = gap_ms - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (gap_ms - self.mean)

    @property
    def variance(self) -> float | None:
        if self.count < 2:
            return None
        return self._m2 / (self.count - 1)


class _Coalescer:
    """Buffers tick emissions so clients see at most one per minimum interval."""

    def __init__(self, detector, min_interval: int | None):
        self.detector = detector
        self.min_interval = min_interval
        self._pending: Changeset | None = None
        self._before: dict[int, Row] = {}
        self._sample: QualitySample | None = None
        self._last_flush: int | None = None

    def mark_started(self, now: int):
        self._last_flush = now

    def set_interval(self, interval: int | None):
        self.min_interval = interval

    @property
    def has_pending(self) -> bool:
        return self._pending is not None

    @property
    def pending_row_count(self) -> int:
        return len(self._pending.inserts) if self._pending is not None else 0

    def offer(self, changeset: Changeset, before: dict[int, Row],
              sample: QualitySample | None, now: int,
              allow_flush: bool) -> Emission | None:
        if self._pending is None:
            self._pending = changeset
            self._before = dict(before)
        else:
            for i, row in before.items():
                self._before.setdefault(i, row)
            self._pending = merge_changesets(self._pending, changeset)
        if sample is not None:
            self._sample = sample
        if not allow_flush:
            return None
        if self.min_interval is not None and self._last_flush is not None and \
                now - self._last_flush < self.min_interval:
            return None
        return self.flush(now)

    def flush(self, now: int) -> Emission | None:
        if self._pending is None:
            return None
        changeset = self._pending
        report = self.detector.report(self._before, changeset)
        sample = self._sample
        self._pending = None
        self._before = {}
        self._sample = None
        self._last_flush = now
        return Emission(changeset=changeset, report=report, sample=sample, t_ms=now)

    def due(self, now: int) -> bool:
        if self._pending is None or self.min_interval is None:
            return False
        return self._last_flush is None or now - self._last_flush >= self.min_interval

    def due_at(self) -> int | None:
        if self._pending is None or self.min_interval is None:
            return None
        return (self._last_flush or 0) + self.min_interval


class Session:
    """One progression over one data source, driven by an external loop."""

    def __init__(self, spec: ProvegaSpec, *, rows: list[Row] | None = None,
                 header: list[str] | None = None,
                 complete_input: bool = True):
        self.spec = spec
        self.chunking = spec.progression.chunking
        self.control_config = spec.progression.control
        self.mode = self.control_config.mode
        self.complete_input = complete_input
        self.header = list(header) if header else None
        self.status = IDLE
        self.error: str | None = None
        self.store = ChangesetStore()
        self.outbox: list[tuple[str, object]] = []
        self.started_at: int | None = None
        self.last_emit_at: int | None = None
        self.last_sample: QualitySample | None = None
        self.rows_emitted = 0
        self._stats = _EmitStats()
        self._input_finished = complete_input

        reading = self.chunking.reading
        self.frequency = reading.frequency if reading else DEFAULT_FREQUENCY_MS
        self.next_deadline: int | None = None

        self._rows: dict[int, Row] = {}
        self._plan: ChunkPlan | None = None
        self._cursor = 0
        self._next_gen_id = 0
        if rows is not None:
            self._rows = {r.id: r for r in rows}
            if reading is not None and self.chunking.type != "process":
                size = reading.chunk_size
                if reading.auto_sized:
                    size = max(1, -(-len(rows) // 100))
                sized = ReadingConfig(reading.method, size, reading.frequency,
                                      reading.seed)
                self._plan = plan_chunks(len(rows), sized)

        self.processor = None
        if self.chunking.processor is not None:
            self.processor = processor_registry.create(
                self.chunking.processor.name,
                self.chunking.processor.parameters,
                self.chunking.type,
            )

        total_rows = None
        if complete_input and self.chunking.type != "process" and rows is not None:
            total_rows = len(rows)
        self.tracker = QualityTracker(
            bindings=spec.progression.monitoring.quality,
            frequency_ms=self.frequency,
            total_rows=total_rows,
            total_iterations=self.processor.total_iterations()
            if self.processor else None,
            complete_input=complete_input,
            header=self.header,
        )
        self.detector = detector_from_spec(spec)
        self.coalescer = _Coalescer(
            self.detector, self.control_config.min_rendering_frequency
        )

    # --- lifecycle ---------------------------------------------------------

    def start(self, now: int) -> SessionState:
        if self.status != IDLE:
            raise IllegalTransitionError(f"cannot start from {self.status}")
        self.started_at = now
        self.coalescer.mark_started(now)
        if self.chunking.type == "process" and self.complete_input:
            if self.processor is None:
                raise ProcessorError("process chunking requires a processor")
            self.processor.prepare(list(self._rows.values()))
        if self.mode == "exploration":
            self._set_status(PAUSED, now)
        else:
            self._set_status(RUNNING, now)
            self._arm_timer(now)
        return self.state()

    def _arm_timer(self, now: int) -> None:
        # Generator-fed sessions tick only once their input has finished.
        if self.complete_input or (self._input_finished and self._work_remains()):
            self.next_deadline = now + self.frequency
        else:
            self.next_deadline = None

    @property
    def step(self) -> int:
        return self.store.step_count - 1

    def total_steps(self) -> int | None:
        if self.chunking.type == "process" and self.processor is not None:
            return self.processor.total_iterations()
        if self.chunking.type == "data" and self._plan is not None:
            return len(self._plan.chunks)
        return None

    def state(self) -> SessionState:
        return SessionState(
            status=self.status,
            step=self.step,
            total_steps=self.total_steps(),
            rows_emitted=self.rows_emitted,
            started_at=self.started_at,
            last_emit_at=self.last_emit_at,
            emit_count=self._stats.count,
            emit_interval_mean=self._stats.mean if self._stats.count else None,
            emit_interval_variance=self._stats.variance,
            mode=self.mode,
        )

    def drain_outbox(self) -> list[tuple[str, object]]:
        events, self.outbox = self.outbox, []
        return events

    def current_document(self) -> dict:
        """The spec document with live steered parameter values folded in."""
        spec = self.spec
        chunking = spec.progression.chunking
        if chunking.reading is not None:
            size = self._plan.chunk_size if self._plan is not None \
                else chunking.reading.chunk_size
            reading = replace(chunking.reading, frequency=self.frequency,
                              chunk_size=size, auto_sized=False)
            chunking = replace(chunking, reading=reading)
        control = replace(spec.progression.control,
                          min_rendering_frequency=self.coalescer.min_interval)
        progression = replace(spec.progression, chunking=chunking, control=control)
        return replace(spec, progression=progression).to_document()

    # --- timing ------------------------------------------------------------

    def tick(self, now: int) -> None:
        """Advance one step from the timer; reschedules the fixed-rate deadline."""
        if self.status != RUNNING or self.next_deadline is None:
            return
        if now < self.next_deadline:
            return
        try:
            self._advance(now)
        except ProcessorError as e:
            self.error = str(e)
            self._flush(now)
            self._set_status(STOPPED, now, warning=self.error)
            return
        if self.status == RUNNING:
            self.next_deadline += self.frequency
            if self.next_deadline <= now:
                # Missed a deadline: emit was late, restart the phase.
                self.next_deadline = now + self.frequency
        else:
            self.next_deadline = None

    def poll(self, now: int) -> None:
        """Flush a coalescing window that elapsed with no new tick."""
        if self.status == RUNNING and self.coalescer.due(now):
            self._emit(self.coalescer.flush(now), now)

    def next_wakeup(self) -> int | None:
        """Earliest instant the driver must call tick or poll, if any."""
        if self.status != RUNNING:
            return None
        candidates = []
        if self.next_deadline is not None:
            candidates.append(self.next_deadline)
        due = self.coalescer.due_at()
        if due is not None:
            candidates.append(due)
        return min(candidates) if candidates else None

    # --- controls ----------------------------------------------------------

    def control(self, action: str, now: int) -> SessionState:
        if action not in ACTIONS:
            raise ValidationError("control.action",
                                  f"expected one of {list(ACTIONS)}, got {action!r}")
        self._check_permitted(action)
        handler = getattr(self, f"_do_{action}")
        handler(now)
        return self.state()

    def _check_permitted(self, action: str):
        cfg = self.control_config
        if action == "pause" and not cfg.pause_enabled:
            raise IllegalTransitionError("pause is disabled for this session")
        if action == "stop" and not cfg.stop_enabled:
            raise IllegalTransitionError("stop is disabled for this session")
        if action in ("step_forward", "step_backward") and not cfg.step_enabled:
            raise IllegalTransitionError("step controls are disabled")

    def _do_play(self, now: int):
        if self.status == RUNNING:
            return
        if self.status != PAUSED:
            raise IllegalTransitionError(f"cannot play from {self.status}")
        self._flush(now)
        self._set_status(RUNNING, now)
        self._arm_timer(now)

    def _do_pause(self, now: int):
        if self.status == PAUSED:
            return
        if self.status != RUNNING:
            raise IllegalTransitionError(f"cannot pause from {self.status}")
        self._flush(now)
        self._set_status(PAUSED, now)
        self.next_deadline = None

    def _do_stop(self, now: int):
        if self.status not in (RUNNING, PAUSED, IDLE):
            raise IllegalTransitionError(f"cannot stop from {self.status}")
        self._flush(now)
        self._set_status(STOPPED, now)
        self.next_deadline = None

    def _do_step_forward(self, now: int):
        if self.status != PAUSED:
            raise IllegalTransitionError(f"cannot step forward from {self.status}")
        had_pending = self.coalescer.has_pending
        self._flush(now)
        if not self._work_remains():
            if had_pending:
                # On-demand refresh: the flush surfaced buffered generator input.
                return
            raise IllegalTransitionError("nothing to advance")
        try:
            self._advance(now)
        except ProcessorError as e:
            self.error = str(e)
            self._flush(now)
            self._set_status(STOPPED, now, warning=self.error)
            raise

    def _do_step_backward(self, now: int):
        if self.status not in (PAUSED, DONE, STOPPED):
            raise IllegalTransitionError(f"cannot step backward from {self.status}")
        self._flush(now)
        if self.store.step_count == 0:
            raise IllegalTransitionError("already at the empty start")
        entry = self.store.invert_last()
        inverse = entry.inverse
        cursor, rows_emitted, proc_snapshot = entry.snapshot
        self._cursor = cursor
        self.rows_emitted = rows_emitted
        if self.processor is not None and proc_snapshot is not None:
            self.processor.restore(proc_snapshot)
        # invert_last already applied the inverse; reconstruct prior values
        # of updated rows from the forward changeset for the report.
        before = {r.id: r for r in entry.forward.inserts}
        before.update({r.id: r for r in entry.forward.updates})
        report = self.detector.report(before, inverse)
        self.tracker.correction(inverse.step)
        emission = Emission(changeset=inverse, report=report, sample=None, t_ms=now)
        self._emit(emission, now)
        if self.status == DONE:
            self._set_status(PAUSED, now)

    # --- parameter steering --------------------------------------------------

    def set_parameter(self, key: str, value, now: int) -> SessionState:
        if self.status == STOPPED:
            raise IllegalTransitionError("session is stopped")
        if key == "frequency":
            self.frequency = self._positive(key, value)
            self.tracker.frequency_ms = self.frequency
            if self.status == RUNNING:
                self.next_deadline = now + self.frequency
        elif key == "chunk_size":
            size = self._positive(key, value)
            if self._plan is None:
                raise ValidationError(
                    key, "chunk production is not engine-owned for this session"
                )
            done_part = self._plan.chunks[:self._cursor]
            remaining = [i for chunk in self._plan.chunks[self._cursor:]
                         for i in chunk]
            self._plan = ChunkPlan(
                chunks=done_part + _split(remaining, size),
                method=self._plan.method,
                chunk_size=size,
                seed=self._plan.seed,
            )
        elif key == "min_rendering_frequency":
            self.coalescer.set_interval(self._positive(key, value))
        else:
            raise ValidationError(key, "not a steerable parameter")
        return self.state()

    @staticmethod
    def _positive(key, value) -> int:
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ValidationError(key, f"expected an integer >= 1, got {value!r}")
        return value

    # --- generator input ------------------------------------------------------

    def buffered_rows(self) -> int:
        """Rows committed but not yet surfaced to clients (coalescing backlog)."""
        return self.coalescer.pending_row_count

    def feed_rows(self, values: list[dict], now: int) -> list[Row]:
        """Commit one generator chunk; emission may be withheld while paused."""
        if self.started_at is None:
            raise IllegalTransitionError("input before start")
        if self.status in (DONE, STOPPED):
            raise IllegalTransitionError(f"input after {self.status}")
        rows = []
        for v in values:
            rows.append(Row(self._next_gen_id, dict(v)))
            self._next_gen_id += 1
        if self.header is None and rows:
            self.header = list(rows[0].values.keys())
            self.tracker.validate_header(self.header)
        self._commit(chunk_rows=rows, now=now,
                     allow_flush=self.status == RUNNING)
        return rows

    def finish_input(self, now: int, warning: str | None = None) -> None:
        """Generator sent end (or disconnected): drain and settle."""
        if self.complete_input or self.status in (DONE, STOPPED):
            return
        self._input_finished = True
        if self.chunking.type in ("mixed", "process") and \
                self.processor is not None and not self.processor.converged:
            # Keep iterating on a timer until the processor settles.
            if self.status == RUNNING:
                self.next_deadline = now + self.frequency
            if warning:
                self._status_event(now, warning)
            return
        self._flush(now)
        self._set_status(DONE, now, warning=warning)
        self.next_deadline = None

    # --- the step itself -------------------------------------------------------

    def _work_remains(self) -> bool:
        if self._plan is not None and self._cursor < len(self._plan.chunks):
            return True
        if self.chunking.type in ("process", "mixed") and \
                self.processor is not None and not self.processor.converged:
            return self._input_finished or self.chunking.type == "process"
        return False

    def _advance(self, now: int) -> None:
        chunk_rows: list[Row] = []
        if self._plan is not None and self._cursor < len(self._plan.chunks):
            chunk_rows = [self._rows[i] for i in self._plan.chunks[self._cursor]]
        self._commit(chunk_rows=chunk_rows, now=now, allow_flush=True,
                     from_plan=bool(chunk_rows))

    def _commit(self, chunk_rows: list[Row], now: int, allow_flush: bool,
                from_plan: bool = False) -> None:
        snapshot = (
            self._cursor,
            self.rows_emitted,
            self.processor.snapshot() if self.processor else None,
        )
        step = self.store.step_count
        changeset = Changeset(step=step, direction="forward",
                              inserts=tuple(chunk_rows))
        metrics = None
        if self.processor is not None:
            self.processor.ingest(chunk_rows)
            result = self.processor.iterate()
            metrics = result.metrics
            changeset = merge_changesets(
                changeset,
                Changeset(step=step, direction="forward",
                          inserts=result.inserts, updates=result.updates,
                          removes=result.removes),
            )
        if from_plan:
            self._cursor += 1
        done = self._is_final()
        before = {}
        for r in changeset.updates:
            if r.id in self.store.rows:
                before[r.id] = self.store.rows[r.id]
        for i in changeset.removes:
            if i in self.store.rows:
                before[i] = self.store.rows[i]
        self.store.apply(changeset, snapshot=snapshot)
        self.rows_emitted += sum(1 for r in changeset.inserts if r.is_data_row())
        t_ms = now - self.started_at
        sample = self.tracker.sample(
            step=step, t_ms=t_ms, changeset=changeset,
            iterations_done=self.processor.iteration if self.processor else 0,
            rows_emitted=self.rows_emitted,
            processor_metrics=metrics,
            done=done,
        )
        self.last_sample = sample
        emission = self.coalescer.offer(changeset, before, sample, now,
                                        allow_flush=allow_flush or done)
        if emission is not None:
            self._emit(emission, now)
        if done:
            leftover = self.coalescer.flush(now)
            if leftover is not None:
                self._emit(leftover, now)
            self._set_status(DONE, now)
            self.next_deadline = None

    def _is_final(self) -> bool:
        plan_exhausted = self._plan is None or self._cursor >= len(self._plan.chunks)
        if not self.complete_input:
            if not self._input_finished:
                return False
            return self.processor is None or self.processor.converged
        if self.chunking.type == "data":
            return plan_exhausted
        if self.chunking.type == "process":
            return self.processor.converged
        return plan_exhausted and self.processor.converged

    # --- emission plumbing -------------------------------------------------------

    def _flush(self, now: int) -> None:
        emission = self.coalescer.flush(now)
        if emission is not None:
            self._emit(emission, now)

    def _emit(self, emission: Emission, now: int) -> None:
        if self.last_emit_at is not None:
            self._stats.push(now - self.last_emit_at)
        self.last_emit_at = now
        self.outbox.append(("changeset", emission))

    def _set_status(self, status: str, now: int, warning: str | None = None):
        self.status = status
        self._status_event(now, warning)

    def _status_event(self, now: int, warning: str | None = None):
        self.outbox.append((
            "status",
            {
                "status": self.status,
                "alive": self.alive(now),
                **({"warning": warning} if warning else {}),
            },
        ))

    def alive(self, now: int) -> bool:
        if self.started_at is None or self.status in (DONE, STOPPED, PAUSED):
            return True
        return self.tracker.alive_at(now - self.started_at)


def run_to_completion(session: Session, clock, *, max_steps: int | None = None
                      ) -> list[tuple[str, object]]:
    """Drive a session's timer until it settles; returns the drained events."""
    events = list(session.drain_outbox())
    if session.status == IDLE:
        session.start(clock.now_ms())
        events.extend(session.drain_outbox())
    emitted = sum(1 for kind, _ in events if kind == "changeset")
    while session.status == RUNNING:
        wakeup = session.next_wakeup()
        if wakeup is None:
            break
        now = clock.wait_until(wakeup)
        session.tick(now)
        session.poll(now)
        batch = session.drain_outbox()
        events.extend(batch)
        emitted += sum(1 for kind, _ in batch if kind == "changeset")
        if max_steps is not None and emitted >= max_steps and \
                session.status == RUNNING:
            session.control("stop", clock.now_ms())
            events.extend(session.drain_outbox())
            break
    return events
