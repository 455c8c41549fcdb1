"""Command-line entry points: headless runs, serving, and the example gallery.

`run` executes one session to completion, in virtual time by default, and
writes one trace line per changeset. `serve` hosts the WebSocket endpoints
plus the static UI. `gallery` lists and exports the bundled examples.
"""

from __future__ import annotations

import argparse
import asyncio
import contextlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import gallery as gallery_bundles
from . import protocol
from .clock import MonotonicClock, VirtualClock
from .data_source import descriptor_from_document, load_complete
from .errors import (
    BindError,
    BindingError,
    ConnectError,
    EmptyDatasetError,
    FormatError,
    InsufficientDataError,
    IoError,
    SpecSyntaxError,
    ValidationError,
)
from .scheduler import DONE, PAUSED, RUNNING, Session
from .server import EngineServer, connect_generator, pump_generator
from .spec_model import parse_spec

EXIT_OK = 0
EXIT_SPEC_ERROR = 1
EXIT_DATA_ERROR = 2
EXIT_SESSION_ERROR = 3

_SPEC_ERRORS = (SpecSyntaxError, ValidationError, BindingError)
_DATA_ERRORS = (IoError, FormatError, EmptyDatasetError, ConnectError,
                InsufficientDataError, BindError)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _SPEC_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SPEC_ERROR
    except _DATA_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA_ERROR


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="provega", description="progressive visualization engine"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a session headlessly, tracing changesets")
    run.add_argument("--spec", required=True, help="specification document path")
    run.add_argument("--data", help="data file overriding the document's source")
    run.add_argument("--trace", help="trace output path (default: stdout)")
    run.add_argument("--seed", type=int, help="overrides reading.seed")
    run.add_argument("--max-steps", type=int, dest="max_steps",
                     help="stop after this many trace lines")
    run.add_argument("--realtime", action="store_true",
                     help="honor the configured cadence on the wall clock")
    run.add_argument("--frequency", type=int, help="overrides the tick frequency (ms)")
    run.add_argument("--max-buffer-rows", type=int, dest="max_buffer_rows",
                     help="generator backpressure cap (rows held unsurfaced)")
    run.set_defaults(func=_cmd_run)

    serve = sub.add_parser("serve", help="host the session and UI over WebSocket/HTTP")
    serve.add_argument("--spec", required=True, help="specification document path")
    serve.add_argument("--data", help="data file overriding the document's source")
    serve.add_argument("--backend", help="ws:// URL of an external generator")
    serve.add_argument("--port", type=int, default=protocol.DEFAULT_PORT)
    serve.add_argument("--ui-dir", dest="ui_dir", help="static UI bundle directory")
    serve.add_argument("--max-buffer-rows", type=int, dest="max_buffer_rows",
                       help="generator backpressure cap (rows held unsurfaced)")
    serve.set_defaults(func=_cmd_serve)

    gallery = sub.add_parser("gallery", help="bundled runnable examples")
    gallery_sub = gallery.add_subparsers(dest="gallery_command", required=True)
    gallery_sub.add_parser("list", help="list bundles").set_defaults(
        func=_cmd_gallery_list
    )
    export = gallery_sub.add_parser("export", help="copy a bundle's files out")
    export.add_argument("name", help="bundle name")
    export.add_argument("--out", required=True, help="destination directory")
    export.set_defaults(func=_cmd_gallery_export)

    return parser


# --- run ---------------------------------------------------------------------


def _cmd_run(args) -> int:
    spec = _load_spec(args.spec, args.data)
    if args.seed is not None:
        spec = _override_seed(spec, args.seed)
    descriptor = descriptor_from_document(spec.base_view, args.data)
    if descriptor is None:
        raise ValidationError("data", "the document names no data source")
    descriptor = _resolve_data_path(descriptor, Path(args.spec).parent,
                                    override_active=args.data is not None)
    if descriptor.is_progressive:
        return _run_attached(args, spec, descriptor.url)

    rows, header = load_complete(descriptor)
    session = Session(spec, rows=rows, header=header, complete_input=True)
    if args.frequency is not None:
        session.set_parameter("frequency", args.frequency, 0)
    clock = MonotonicClock() if args.realtime else VirtualClock()
    with _trace_sink(args.trace) as sink:
        writer = _TraceWriter(sink, session, clock, args.max_steps)
        session.start(clock.now_ms())
        writer.write(session.drain_outbox())
        if session.status == PAUSED:
            session.control("play", clock.now_ms())
            writer.write(session.drain_outbox())
        while session.status == RUNNING:
            wakeup = session.next_wakeup()
            if wakeup is None:
                break
            now = clock.wait_until(wakeup)
            session.tick(now)
            session.poll(now)
            writer.write(session.drain_outbox())
    return _exit_for(session)


def _run_attached(args, spec, url: str) -> int:
    clock = MonotonicClock()

    async def go() -> int:
        feed = await connect_generator(url)
        session = Session(spec, complete_input=False)
        if args.frequency is not None:
            session.set_parameter("frequency", args.frequency, 0)
        with _trace_sink(args.trace) as sink:
            writer = _TraceWriter(sink, session, clock, args.max_steps)
            session.start(clock.now_ms())
            writer.write(session.drain_outbox())
            if session.status == PAUSED:
                session.control("play", clock.now_ms())
                writer.write(session.drain_outbox())
            pump = asyncio.create_task(pump_generator(
                session, feed, clock, writer.write_async,
                ack_enabled=spec.progression.control.ack_flow_control,
                max_buffer_rows=args.max_buffer_rows,
            ))
            # Timer and coalescing flushes must run while input streams in,
            # not just after it; a feed can leave a residue whose rendering
            # window elapses between chunks.
            while not pump.done():
                wakeup = session.next_wakeup()
                timeout = 0.05 if wakeup is None else \
                    max(0, wakeup - clock.now_ms()) / 1000
                await asyncio.wait([pump], timeout=timeout)
                now = clock.now_ms()
                session.tick(now)
                session.poll(now)
                writer.write(session.drain_outbox())
            await pump
            while session.status == RUNNING:
                wakeup = session.next_wakeup()
                if wakeup is None:
                    break
                await asyncio.sleep(max(0, wakeup - clock.now_ms()) / 1000)
                now = clock.now_ms()
                session.tick(now)
                session.poll(now)
                writer.write(session.drain_outbox())
        return _exit_for(session)

    return asyncio.run(go())


class _TraceWriter:
    """Writes one compact line per changeset; enforces --max-steps."""

    def __init__(self, sink, session: Session, clock, max_steps: int | None):
        self.sink = sink
        self.session = session
        self.clock = clock
        self.max_steps = max_steps
        self.lines = 0

    def write(self, events) -> None:
        for kind, payload in events:
            if kind != "changeset":
                continue
            line = protocol.trace_line(payload)
            self.sink.write(
                json.dumps(line, separators=(",", ":"), allow_nan=False) + "\n"
            )
            self.lines += 1
            if self.max_steps is not None and self.lines >= self.max_steps and \
                    self.session.status == RUNNING:
                self.session.control("stop", self.clock.now_ms())
                self.write(self.session.drain_outbox())

    async def write_async(self, events) -> None:
        self.write(events)


def _exit_for(session: Session) -> int:
    if session.status == DONE:
        return EXIT_OK
    return EXIT_SESSION_ERROR if session.error else EXIT_OK


@contextlib.contextmanager
def _trace_sink(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
        return
    handle = open(path, "w", encoding="utf-8")
    try:
        yield handle
    finally:
        handle.close()


# --- serve -------------------------------------------------------------------


def _cmd_serve(args) -> int:
    spec = _load_spec(args.spec, args.data)
    descriptor = descriptor_from_document(spec.base_view, args.data)
    if descriptor is not None:
        descriptor = _resolve_data_path(descriptor, Path(args.spec).parent,
                                        override_active=args.data is not None)
    backend = args.backend
    rows = header = None
    complete = False
    if backend is not None:
        if descriptor is not None and not descriptor.is_progressive:
            raise ValidationError(
                "data", "--backend conflicts with a complete data source"
            )
    elif descriptor is not None and descriptor.is_progressive:
        backend = descriptor.url
    elif descriptor is not None:
        rows, header = load_complete(descriptor)
        complete = True

    session = Session(spec, rows=rows, header=header, complete_input=complete)
    port = _resolve_port(args.port)
    ui_dir = args.ui_dir or _default_ui_dir()
    server = EngineServer(session, port=port, ui_dir=ui_dir, backend_url=backend,
                          max_buffer_rows=args.max_buffer_rows)

    async def go() -> None:
        actual = await server.start()
        print(f"session: ws://{server.host}:{actual}{protocol.SESSION_PATH}")
        print(f"ingest:  ws://{server.host}:{actual}{protocol.INGEST_PATH}")
        if ui_dir:
            print(f"ui:      http://{server.host}:{actual}/")
        sys.stdout.flush()
        await server.wait()

    try:
        asyncio.run(go())
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def _resolve_port(flag_value: int) -> int:
    env = os.environ.get("PROVEGA_PORT")
    if env is None:
        return flag_value
    try:
        return int(env)
    except ValueError:
        raise ValidationError("PROVEGA_PORT", f"not a port number: {env!r}") from None


def _default_ui_dir() -> str | None:
    bundled = Path(__file__).parent / "static"
    if (bundled / "index.html").is_file():
        return str(bundled)
    return None


# --- gallery -----------------------------------------------------------------


def _cmd_gallery_list(args) -> int:
    del args
    for bundle in gallery_bundles.BUNDLES:
        print(f"{bundle.name:24} {bundle.category:12} {bundle.description}")
    return EXIT_OK


def _cmd_gallery_export(args) -> int:
    for path in gallery_bundles.export_bundle(args.name, args.out):
        print(path)
    return EXIT_OK


# --- shared helpers ------------------------------------------------------------


def _load_spec(spec_path: str, data_override: str | None):
    try:
        text = Path(spec_path).read_text(encoding="utf-8")
    except OSError as e:
        raise SpecSyntaxError(f"cannot read spec: {e}") from e
    spec = parse_spec(text, data_override=data_override)
    for warning in spec.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return spec


def _override_seed(spec, seed: int):
    if not 0 <= seed < (1 << 64):
        raise ValidationError("--seed", "seed must be an unsigned 64-bit integer")
    reading = spec.progression.chunking.reading
    if reading is None:
        print("warning: --seed ignored; this session has no reading block",
              file=sys.stderr)
        return spec
    chunking = replace(spec.progression.chunking,
                       reading=replace(reading, seed=seed))
    return replace(spec, progression=replace(spec.progression, chunking=chunking))


def _resolve_data_path(descriptor, spec_dir: Path, override_active: bool):
    # url paths inside a document resolve against the document's directory;
    # a --data override is a CLI argument and stays CWD-relative.
    if descriptor.kind == "file" and not override_active and \
            not Path(descriptor.path).is_absolute():
        return replace(descriptor, path=str(spec_dir / descriptor.path))
    return descriptor


if __name__ == "__main__":
    sys.exit(main())
