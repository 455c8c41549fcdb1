"""Release gate: every shipped guarantee at its stated tolerance.

One class per guarantee. The cadence scenarios run on the real clock and
sleep for their full schedules; everything else uses virtual time. Budget
for the whole module is about a minute of wall time.
"""

from __future__ import annotations

import asyncio
import json
import random
import statistics
import subprocess
import sys
import time
from dataclasses import replace
from math import ceil
from pathlib import Path

import pytest
from websockets.asyncio.client import connect

from provega import protocol
from provega.clock import MonotonicClock, VirtualClock
from provega.data_source import descriptor_from_document, load_complete
from provega.gallery import bundle_names, bundle_root, get_bundle, read_bundle_file
from provega.processors import kmeans_init
from provega.quality import estimate_etc
from provega.rng import SplitMix64, sample_indices, shuffled
from provega.scheduler import DONE, PAUSED, Session, plan_chunks, run_to_completion
from provega.server import EngineServer, pump_generator
from provega.spec_model import ReadingConfig, normalize_document
from provega.store import Rect

from .conftest import (
    apply_naive,
    bbox_naive,
    changeset_emissions,
    data_doc,
    diff_states,
    lloyd_reference,
    make_session,
    parse_doc,
    point_values,
    processor_doc,
    ws_doc,
)
from .test_gallery import run_bundle
from .test_processors import as_rows, blobs
from .test_protocol import FRAME_NAMES, constructed_frames, golden

# Pinned inputs for the clustering scenarios. point_values(5000, seed=2) with
# kmeans seed 0 takes 71 Lloyd iterations to converge, comfortably past the
# 40 emissions the cadence bands need; the five well-separated blob centers
# give mixed and full-dataset runs one shared optimum to agree on.
CLUSTER_SEED = 2
KMEANS_SEED = 0
BLOB_CENTERS = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0), (5.0, 5.0)]

SCENARIO_BUDGET_S = 60.0


def cluster_points() -> list[dict]:
    return point_values(5000, seed=CLUSTER_SEED)


def emission_times(events) -> list[int]:
    return [e.t_ms for e in changeset_emissions(events)]


def mean_gap(times: list[int]) -> float:
    gaps = [b - a for a, b in zip(times, times[1:])]
    return statistics.fmean(gaps)


class TestCadence:
    """Real-clock emission pacing for all four chunking arrangements."""

    def run_realtime(self, doc) -> list[int]:
        session = make_session(doc)
        started = time.monotonic()
        events = run_to_completion(session, MonotonicClock())
        assert time.monotonic() - started <= SCENARIO_BUDGET_S
        assert session.status == DONE
        return emission_times(events)

    def test_data_chunking_sustains_250ms(self):
        values = [{"x": (i % 997) / 997.0, "y": (i % 83) / 83.0}
                  for i in range(100_000)]
        doc = data_doc(values, chunk_size=2400, frequency=250)
        times = self.run_realtime(doc)
        assert len(times) >= 40
        assert 200.0 <= mean_gap(times) <= 300.0

    def test_process_chunking_sustains_125ms(self):
        doc = processor_doc(
            cluster_points(), chunking_type="process",
            reading={"method": "ascending", "chunk_size": 5000,
                     "frequency": 125},
            processor={"name": "kmeans", "k": 5, "seed": KMEANS_SEED},
        )
        times = self.run_realtime(doc)
        assert len(times) >= 40
        assert 100.0 <= mean_gap(times) <= 150.0

    def test_mixed_chunking_sustains_500ms(self):
        doc = processor_doc(
            cluster_points(), chunking_type="mixed",
            reading={"method": "ascending", "chunk_size": 125,
                     "frequency": 500},
            processor={"name": "kmeans", "k": 5, "seed": KMEANS_SEED},
        )
        times = self.run_realtime(doc)
        assert len(times) >= 40
        assert 400.0 <= mean_gap(times) <= 600.0

    def test_backend_feed_coalesces_to_330ms(self):
        # A compliant generator paces 8-row chunks every 80 ms and waits for
        # each ack; the rendering window folds them into ~330 ms emissions.
        async def scenario() -> list[int]:
            # Quality samples ride along so each frame carries the engine
            # clock; client arrival times would fold in transport jitter.
            spec = parse_doc(ws_doc(
                control={"ack": True, "min_rendering_frequency": 330},
                monitoring={"quality": {"absolute_progress": "builtin"}}))
            server = EngineServer(Session(spec, complete_input=False), port=0)
            port = await server.start()
            try:
                async with connect(f"ws://127.0.0.1:{port}/session") as ui:
                    for _ in range(3):
                        await asyncio.wait_for(ui.recv(), 5)

                    async def generate():
                        async with connect(
                                f"ws://127.0.0.1:{port}/ingest") as gen:
                            for batch in range(180):
                                rows = [{"x": ((batch * 8 + i) % 100) / 100.0,
                                         "y": ((batch * 8 + i) % 7) / 7.0}
                                        for i in range(8)]
                                await gen.send(protocol.serialize_message(
                                    protocol.chunk_message(batch, rows)))
                                ack = json.loads(
                                    await asyncio.wait_for(gen.recv(), 5))
                                assert ack == {"type": "ack", "batch": batch}
                                await asyncio.sleep(0.08)
                            await gen.send(protocol.serialize_message(
                                protocol.end_message()))

                    feeder = asyncio.create_task(generate())
                    times: list[int] = []
                    while True:
                        frame = json.loads(await asyncio.wait_for(ui.recv(), 10))
                        if frame["type"] == "changeset" and frame["quality"]:
                            times.append(frame["quality"]["t_ms"])
                        elif frame["type"] == "status" and \
                                frame["status"] == "done":
                            break
                    await feeder
                    return times
            finally:
                await server.stop()

        started = time.monotonic()
        times = asyncio.run(scenario())
        assert time.monotonic() - started <= SCENARIO_BUDGET_S
        assert len(times) >= 40
        assert 264.0 <= mean_gap(times) <= 396.0


class TestChunkPlans:
    """Plans partition the input exactly and reproduce across processes."""

    def test_every_method_yields_a_permutation_over_100_seeds(self):
        rng = random.Random(20260819)
        methods = ("ascending", "descending", "random")
        for draw in range(100):
            n = rng.randint(1, 10_000)
            size = rng.randint(1, n)
            method = methods[draw % 3]
            config = ReadingConfig(method, size, 250, seed=rng.randint(0, 2**32))
            plan = plan_chunks(n, config)
            flat = plan.flat()
            assert sorted(flat) == list(range(n))
            assert all(len(c) == size for c in plan.chunks[:-1])
            assert 1 <= len(plan.chunks[-1]) <= size
            if method == "ascending":
                assert flat == list(range(n))
            elif method == "descending":
                assert flat == list(range(n - 1, -1, -1))
            else:
                assert plan_chunks(n, config).chunks == plan.chunks

    def test_random_plans_are_bit_identical_across_processes(self):
        triples = [(6, 2, 42), (10, 3, 42), (10_000, 997, 7),
                   (513, 64, 123_456_789)]
        code = (
            "import json\n"
            "from provega.scheduler import plan_chunks\n"
            "from provega.spec_model import ReadingConfig\n"
            f"triples = {triples!r}\n"
            "plans = [plan_chunks(n, ReadingConfig('random', size, 250, "
            "seed=s)).chunks for n, size, s in triples]\n"
            "print(json.dumps(plans))\n"
        )
        outputs = [
            subprocess.run([sys.executable, "-c", code], capture_output=True,
                           text=True, check=True).stdout
            for _ in range(2)
        ]
        assert outputs[0] == outputs[1]
        local = [plan_chunks(n, ReadingConfig("random", size, 250, seed=s)).chunks
                 for n, size, s in triples]
        assert json.loads(outputs[0]) == [[list(c) for c in chunks]
                                          for chunks in local]
        # Frozen outputs of the normative generator and shuffle.
        rng = SplitMix64(0)
        assert rng.next_u64() == 0xE220A8397B1DCDAF
        assert rng.next_u64() == 0x6E789E6AA1B965F4
        assert shuffled(6, 42) == [4, 3, 0, 2, 5, 1]
        assert shuffled(10, 42) == [0, 9, 5, 8, 6, 4, 7, 2, 1, 3]
        assert sample_indices(10, 3, 42) == [0, 9, 5]


class TestHistoryInversion:
    def test_1000_random_scripts_match_the_net_prefix_oracle(self):
        rng = random.Random(0xACCE97)
        explore = {"mode": "exploration"}
        for script_no in range(1000):
            n = rng.randint(2, 512)
            chunk = rng.randint(1, 4)
            doc = data_doc(point_values(n, seed=script_no + 1),
                           chunk_size=chunk, frequency=100, control=explore)
            session = make_session(doc)
            session.start(0)
            limit = min(ceil(n / chunk), 256)
            # Every eighth script walks nearly straight forward so the deep
            # end of the depth range gets exercised too.
            back_p = 0.05 if script_no % 8 == 0 else 0.4

            depth = 0
            now = 0
            replica: dict[int, dict] = {}
            for _ in range(rng.randint(1, 300)):
                now += 1
                if depth > 0 and rng.random() < back_p:
                    session.control("step_backward", now)
                    depth -= 1
                elif depth < limit:
                    session.control("step_forward", now)
                    depth += 1
                else:
                    break
                for e in changeset_emissions(session.drain_outbox()):
                    replica = apply_naive(replica, e.changeset)

            oracle = make_session(doc)
            oracle.start(0)
            for _ in range(depth):
                oracle.control("step_forward", now)
            expected: dict[int, dict] = {}
            for e in changeset_emissions(oracle.drain_outbox()):
                expected = apply_naive(expected, e.changeset)

            state = {i: dict(r.values) for i, r in session.store.rows.items()}
            assert state == expected, f"script {script_no} diverged"
            assert replica == expected, f"script {script_no} replica diverged"
            assert session.step == depth - 1


def replay_bundle_with_change_tracking(name: str, tmp_path: Path):
    """Run a bundle in virtual time with mark and area reporting forced on."""
    bundle = get_bundle(name)
    doc = json.loads(read_bundle_file(name, "spec.json"))
    monitoring = doc["provega"]["progression"].setdefault("monitoring", {})
    monitoring["change"] = {"mark": True, "area": True}

    data_override = None
    if bundle.run_data is not None:
        data = tmp_path / bundle.run_data
        data.write_text(read_bundle_file(name, bundle.run_data))
        data_override = str(data)

    spec = normalize_document(doc, data_override=data_override)
    descriptor = descriptor_from_document(spec.base_view, data_override)
    if descriptor.kind == "file" and data_override is None and \
            not Path(descriptor.path).is_absolute():
        bundle_dir = Path(str(bundle_root(name)))
        descriptor = replace(descriptor, path=str(bundle_dir / descriptor.path))
    rows, header = load_complete(descriptor)
    session = Session(spec, rows=rows, header=header, complete_input=True)
    clock = VirtualClock()
    events = run_to_completion(session, clock)
    if session.status == PAUSED:
        session.control("play", clock.now_ms())
        events += run_to_completion(session, clock)
    return spec, session, events


class TestChangeDetection:
    @pytest.mark.parametrize("name", bundle_names())
    def test_reports_match_brute_force_diffs(self, name, tmp_path):
        spec, session, events = replay_bundle_with_change_tracking(name, tmp_path)
        assert session.status == DONE
        x_field = spec.base_view["encoding"]["x"]["field"]
        y_field = spec.base_view["encoding"]["y"]["field"]

        state: dict[int, dict] = {}
        checked = 0
        for e in changeset_emissions(events):
            before = state
            state = apply_naive(state, e.changeset)
            changed = diff_states(before, state)
            assert e.report is not None
            assert set(e.report.changed_ids) == changed
            area = bbox_naive(before, state, changed, x_field, y_field)
            if area is None:
                assert e.report.changed_area is None
            else:
                assert e.report.changed_area == Rect(*area)
            checked += 1
        assert checked > 0


class TestQualityInvariants:
    def quality_docs(self):
        monitoring = {"quality": {"absolute_progress": "builtin",
                                  "relative_progress": "builtin",
                                  "stability": "builtin"}}
        yield data_doc(point_values(200, seed=5), chunk_size=9, frequency=50,
                       monitoring=monitoring)
        yield processor_doc(
            cluster_points(), chunking_type="process",
            processor={"name": "kmeans", "k": 5, "seed": KMEANS_SEED},
            monitoring=monitoring)
        yield processor_doc(
            cluster_points(), chunking_type="mixed",
            reading={"method": "ascending", "chunk_size": 500,
                     "frequency": 100},
            processor={"name": "kmeans", "k": 5, "seed": KMEANS_SEED},
            monitoring=monitoring)

    def test_metrics_hold_their_bounds_across_chunking_types(self):
        for doc in self.quality_docs():
            session = make_session(doc)
            events = run_to_completion(session, VirtualClock())
            samples = [e.sample for e in changeset_emissions(events)]
            assert samples and all(s is not None for s in samples)

            absolutes = [s.absolute_progress for s in samples
                         if s.absolute_progress is not None]
            assert absolutes == sorted(absolutes)
            assert samples[-1].absolute_progress == 1.0
            assert samples[-1].etc_ms == 0.0
            for s in samples:
                for value in (s.absolute_progress, s.relative_progress,
                              s.stability, s.certainty):
                    if value is not None:
                        assert 0.0 <= value <= 1.0
                if s.etc_ms is not None:
                    assert s.etc_ms >= 0.0

    def test_etc_formula_spot_check(self):
        assert estimate_etc(1000, 0.5) == 1000.0


class TestProcessorCorrectness:
    def test_objective_never_increases_and_matches_batch_lloyd(self):
        points = cluster_points()
        state = kmeans_init(as_rows(points), k=5, seed=KMEANS_SEED)
        objectives: list[float] = []
        for _ in range(600):
            result = state.iterate()
            if result.metrics:
                objectives.append(result.metrics["objective"])
            if result.converged:
                break
        assert state.converged
        assert len(objectives) >= 40
        for earlier, later in zip(objectives, objectives[1:]):
            assert later <= earlier + 1e-12

        doc = processor_doc(
            points, chunking_type="process",
            processor={"name": "kmeans", "k": 5, "seed": KMEANS_SEED})
        session = make_session(doc)
        run_to_completion(session, VirtualClock())
        pts = [(v["x"], v["y"]) for v in points]
        init = [pts[i] for i in sample_indices(len(pts), 5, KMEANS_SEED)]
        reference, _, _ = lloyd_reference(pts, init)
        for got, want in zip(session.processor.centroids, reference):
            assert abs(got[0] - want[0]) <= 1e-9
            assert abs(got[1] - want[1]) <= 1e-9

    def test_mixed_run_matches_full_dataset_convergence(self):
        values = blobs(BLOB_CENTERS, per=1000, spread=0.5, seed=3)
        pts = [(v["x"], v["y"]) for v in values]

        def objective(cents) -> float:
            return sum(min((x - cx) ** 2 + (y - cy) ** 2 for cx, cy in cents)
                       for x, y in pts)

        doc = processor_doc(
            values, chunking_type="mixed",
            reading={"method": "random", "chunk_size": 500, "frequency": 100,
                     "seed": 13},
            processor={"name": "kmeans", "k": 5, "seed": 23})
        session = make_session(doc)
        run_to_completion(session, VirtualClock())
        mixed = objective([tuple(c) for c in session.processor.centroids])

        init = [pts[i] for i in sample_indices(len(pts), 5, 23)]
        reference, _, _ = lloyd_reference(pts, init)
        full = objective([tuple(c) for c in reference])
        assert abs(mixed - full) / full <= 1e-6


class InstrumentedFeed:
    """Window-1 generator stand-in that records ack ordering violations."""

    warning = None

    def __init__(self, count: int, surfaced: set[int]):
        self.count = count
        self.surfaced = surfaced
        self.in_flight = 0
        self.max_in_flight = 0
        self.acked: list[int] = []
        self.violations: list[str] = []

    async def batches(self):
        for batch in range(self.count):
            if self.in_flight != 0:
                self.violations.append(
                    f"batch {batch} sent with {self.in_flight} in flight")
            self.in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
            # One row per batch, so the surfaced row id equals the batch.
            yield batch, [{"x": float(batch % 97), "y": float(batch % 13)}]

    async def ack(self, batch: int) -> None:
        if batch not in self.surfaced:
            self.violations.append(f"ack {batch} before its rows surfaced")
        self.in_flight -= 1
        self.acked.append(batch)

    async def error(self, message: str) -> None:
        self.violations.append(f"engine error: {message}")

    async def close(self) -> None:
        pass


class TestAckFlowControl:
    def test_in_flight_never_exceeds_one_over_10000_batches(self):
        async def scenario() -> InstrumentedFeed:
            spec = parse_doc(ws_doc(control={"ack": True}))
            session = Session(spec, complete_input=False)
            clock = VirtualClock()
            session.start(clock.now_ms())
            surfaced: set[int] = set()

            async def emit(events):
                for e in changeset_emissions(events):
                    surfaced.update(r.id for r in e.changeset.inserts)

            feed = InstrumentedFeed(10_000, surfaced)
            await pump_generator(session, feed, clock, emit, ack_enabled=True)
            assert session.status == DONE
            return feed

        feed = asyncio.run(scenario())
        assert feed.violations == []
        assert feed.max_in_flight == 1
        assert feed.acked == list(range(10_000))


class TestDeterminism:
    @pytest.mark.parametrize("name", bundle_names())
    def test_five_virtual_runs_are_byte_identical(self, name, tmp_path):
        traces = {run_bundle(name, tmp_path) for _ in range(5)}
        assert len(traces) == 1


class TestProtocolGoldens:
    def test_every_frame_round_trips_bit_exactly(self):
        frames = constructed_frames()
        for name in FRAME_NAMES:
            text = golden(name)
            assert protocol.serialize_message(frames[name]) == text
            assert protocol.serialize_message(protocol.parse_message(text)) == text
        covered = {json.loads(golden(name))["type"] for name in FRAME_NAMES}
        catalog = set(protocol.ENGINE_TO_CLIENT) | \
            set(protocol.CLIENT_TO_ENGINE) | \
            set(protocol.GENERATOR_TO_ENGINE) | \
            set(protocol.ENGINE_TO_GENERATOR)
        assert covered == catalog
