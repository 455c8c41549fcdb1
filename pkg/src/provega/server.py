"""WebSocket endpoints: UI clients on /session, generator input on /ingest.

One EngineServer wraps one Session. All session mutations happen on the event
loop, between awaits, which serializes them exactly like a command queue.
The first UI client steers; later clients observe until a promotion.
"""

from __future__ import annotations

import asyncio
import http
from pathlib import Path

from websockets.asyncio.client import connect as ws_connect
from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed, InvalidHandshake, InvalidURI

from . import protocol
from .clock import MonotonicClock
from .errors import (
    BindError,
    BindingError,
    ConnectError,
    IllegalTransitionError,
    ProtocolError,
    ValidationError,
)
from .scheduler import IDLE, Session

OBSERVER_QUEUE_LIMIT = 1024
_BUFFER_POLL_S = 0.005

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".map": "application/json",
}


class GeneratorFeed:
    """One generator connection: iterate its batches, ack committed ones."""

    def __init__(self, ws):
        self._ws = ws
        self.warning: str | None = None
        self.ended = False

    async def batches(self):
        """Yield (batch, rows) until end{} or disconnect; disconnects warn."""
        while True:
            try:
                frame = await self._ws.recv()
            except ConnectionClosed:
                if not self.ended:
                    self.warning = "generator disconnected before end"
                return
            message = protocol.parse_message(frame)
            mtype = message["type"]
            if mtype == "chunk":
                yield message["batch"], message["rows"]
            elif mtype == "end":
                self.ended = True
                return
            else:
                raise ProtocolError(
                    f"unexpected message type {mtype!r} on the ingest stream"
                )

    async def ack(self, batch: int) -> None:
        try:
            await self._ws.send(protocol.serialize_message(protocol.ack_message(batch)))
        except ConnectionClosed:
            pass

    async def error(self, message: str) -> None:
        try:
            await self._ws.send(
                protocol.serialize_message(protocol.error_message(message))
            )
        except ConnectionClosed:
            pass

    async def close(self) -> None:
        await self._ws.close()


async def connect_generator(url: str, *, ack_window: int = 1,
                            max_buffer_rows: int | None = None) -> GeneratorFeed:
    """Dial an external generator. The engine reads one frame at a time, so it
    never holds more than one unacked batch regardless of the window; the
    window governs how far a compliant generator runs ahead."""
    del ack_window, max_buffer_rows  # policy applied by the pump, not the dial
    try:
        ws = await ws_connect(url, max_size=None)
    except (OSError, InvalidURI, InvalidHandshake, asyncio.TimeoutError) as e:
        raise ConnectError(f"cannot reach generator at {url}: {e}") from e
    return GeneratorFeed(ws)


async def pump_generator(session: Session, feed: GeneratorFeed, clock, emit, *,
                         ack_enabled: bool = True,
                         max_buffer_rows: int | None = None) -> None:
    """Ingest loop: recv -> commit -> surface -> ack, one batch in flight.

    `emit` receives each drained outbox batch before the ack goes out. When
    the un-surfaced backlog exceeds max_buffer_rows the ack is withheld and
    no further frame is read, pushing backpressure onto the transport.
    """
    try:
        async for batch, rows in feed.batches():
            _check_columns(session, rows)
            session.feed_rows(rows, clock.now_ms())
            await emit(session.drain_outbox())
            while max_buffer_rows is not None and \
                    session.buffered_rows() > max_buffer_rows:
                await asyncio.sleep(_BUFFER_POLL_S)
                await emit(session.drain_outbox())
            if ack_enabled:
                await feed.ack(batch)
    except (ProtocolError, BindingError) as e:
        await feed.error(str(e))
        await feed.close()
        feed.warning = str(e)
    except IllegalTransitionError:
        # Input after stop/done: drop the rest of the stream.
        await feed.close()
    session.finish_input(clock.now_ms(), warning=feed.warning)
    await emit(session.drain_outbox())


def _check_columns(session: Session, rows: list[dict]) -> None:
    if session.header is None:
        return
    known = set(session.header)
    for row in rows:
        for name in row:
            if name not in known:
                raise ProtocolError(
                    f"column {name!r} introduced mid-stream", path="chunk"
                )


class _Client:
    def __init__(self, ws):
        self.ws = ws
        self.queue: asyncio.Queue[str] = asyncio.Queue(maxsize=OBSERVER_QUEUE_LIMIT)
        self.writer: asyncio.Task | None = None


class EngineServer:
    """Serves one session to UI clients and, optionally, a generator."""

    def __init__(self, session: Session, *, clock=None, host: str = "127.0.0.1",
                 port: int = protocol.DEFAULT_PORT, ui_dir: str | None = None,
                 backend_url: str | None = None,
                 max_buffer_rows: int | None = None):
        self.session = session
        self.clock = clock or MonotonicClock()
        self.host = host
        self.port = port
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self.backend_url = backend_url
        self.max_buffer_rows = max_buffer_rows
        self._clients: list[_Client] = []
        self._controller: _Client | None = None
        self._generator_busy = False
        self._wake = asyncio.Event()
        self._server = None
        self._tasks: list[asyncio.Task] = []

    # --- lifecycle -----------------------------------------------------------

    async def start(self) -> int:
        try:
            self._server = await ws_serve(
                self._handle, self.host, self.port,
                process_request=self._process_request, max_size=None,
            )
        except OSError as e:
            raise BindError(f"cannot bind {self.host}:{self.port}: {e}") from e
        if self.session.status == IDLE:
            self.session.start(self.clock.now_ms())
            await self._emit(self.session.drain_outbox())
        self._tasks.append(asyncio.create_task(self._drive()))
        if self.backend_url is not None:
            feed = await connect_generator(self.backend_url)
            self._tasks.append(asyncio.create_task(self._pump_backend(feed)))
        return self._server.sockets[0].getsockname()[1]

    async def stop(self) -> None:
        for task in self._tasks:
            task.cancel()
        for task in self._tasks:
            try:
                await task
            except (asyncio.CancelledError, Exception):
                pass
        self._tasks.clear()
        for client in list(self._clients):
            await self._drop(client)
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def wait(self) -> None:
        if self._server is not None:
            await self._server.wait_closed()

    async def serve_forever(self) -> None:
        await self.start()
        await self.wait()

    # --- request routing -------------------------------------------------------

    def _process_request(self, connection, request):
        path = request.path.split("?", 1)[0]
        if path in (protocol.SESSION_PATH, protocol.INGEST_PATH):
            return None
        return self._static_response(connection, path)

    def _static_response(self, connection, path: str):
        if self.ui_dir is None:
            return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        name = "index.html" if path == "/" else path.lstrip("/")
        target = (self.ui_dir / name).resolve()
        try:
            target.relative_to(self.ui_dir.resolve())
        except ValueError:
            return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        if not target.is_file():
            return connection.respond(http.HTTPStatus.NOT_FOUND, "not found\n")
        body = target.read_text(encoding="utf-8")
        response = connection.respond(http.HTTPStatus.OK, body)
        ctype = _CONTENT_TYPES.get(target.suffix.lower())
        if ctype:
            response.headers["Content-Type"] = ctype
        return response

    async def _handle(self, ws) -> None:
        path = ws.request.path.split("?", 1)[0]
        if path == protocol.SESSION_PATH:
            await self._handle_client(ws)
        elif path == protocol.INGEST_PATH:
            await self._handle_ingest(ws)
        else:
            await ws.close()

    # --- UI clients ---------------------------------------------------------------

    async def _handle_client(self, ws) -> None:
        client = _Client(ws)
        self._clients.append(client)
        if self._controller is None and len(self._clients) == 1:
            self._controller = client
        client.writer = asyncio.create_task(self._write_loop(client))
        try:
            await self._greet(client)
            async for frame in ws:
                await self._on_client_frame(client, frame)
        except ConnectionClosed:
            pass
        finally:
            await self._drop(client)

    async def _greet(self, client: _Client) -> None:
        session = self.session
        hello = protocol.hello_message(
            session.current_document(), session.header or [],
            session.tracker.total_rows,
        )
        await self._send(client, hello)
        catchup = protocol.catchup_message(
            max(session.step, 0), session.store.snapshot_rows(), session.last_sample
        )
        await self._send(client, catchup)
        await self._send(
            client,
            protocol.status_message(session.status, session.alive(self.clock.now_ms())),
        )

    async def _on_client_frame(self, client: _Client, frame: str) -> None:
        session = self.session
        try:
            message = protocol.parse_message(frame)
        except ProtocolError as e:
            await self._send(client, protocol.error_message(str(e), e.path))
            return
        mtype = message["type"]
        if mtype == "snapshot_request":
            await self._send(
                client, protocol.snapshot_message(session.current_document())
            )
            return
        if mtype not in ("control", "set"):
            await self._send(
                client,
                protocol.error_message(f"unexpected message type {mtype!r}"),
            )
            return
        if self._controller is None:
            # Promotion: first to steer wins; let its queued backlog drain so
            # direct sends cannot overtake messages already enqueued.
            while not client.queue.empty():
                await asyncio.sleep(0)
            self._controller = client
        if client is not self._controller:
            await self._send(
                client,
                protocol.status_message(
                    session.status, session.alive(self.clock.now_ms()),
                    warning="not controller",
                ),
            )
            return
        now = self.clock.now_ms()
        try:
            if mtype == "control":
                session.control(message["action"], now)
            else:
                session.set_parameter(message["key"], message["value"], now)
        except (IllegalTransitionError, ValidationError) as e:
            path = getattr(e, "path", None)
            await self._send(client, protocol.error_message(str(e), path))
        self._wake.set()
        await self._emit(session.drain_outbox())

    async def _write_loop(self, client: _Client) -> None:
        try:
            while True:
                text = await client.queue.get()
                await client.ws.send(text)
        except (ConnectionClosed, asyncio.CancelledError):
            pass

    async def _send(self, client: _Client, message: dict) -> None:
        text = protocol.serialize_message(message)
        if client is self._controller:
            try:
                await client.ws.send(text)
            except ConnectionClosed:
                pass
            return
        try:
            client.queue.put_nowait(text)
        except asyncio.QueueFull:
            await self._drop(client)

    async def _drop(self, client: _Client) -> None:
        if client in self._clients:
            self._clients.remove(client)
        if client is self._controller:
            self._controller = None
        if client.writer is not None:
            client.writer.cancel()
        try:
            await client.ws.close()
        except ConnectionClosed:
            pass

    # --- generator input ------------------------------------------------------------

    async def _handle_ingest(self, ws) -> None:
        feed = GeneratorFeed(ws)
        if self._generator_busy:
            await feed.error("a generator is already connected")
            await feed.close()
            return
        self._generator_busy = True
        try:
            await pump_generator(
                self.session, feed, self.clock, self._ingest_emit,
                ack_enabled=self.session.control_config.ack_flow_control,
                max_buffer_rows=self.max_buffer_rows,
            )
        finally:
            self._generator_busy = False
        self._wake.set()

    async def _pump_backend(self, feed: GeneratorFeed) -> None:
        self._generator_busy = True
        try:
            await pump_generator(
                self.session, feed, self.clock, self._ingest_emit,
                ack_enabled=self.session.control_config.ack_flow_control,
                max_buffer_rows=self.max_buffer_rows,
            )
        finally:
            self._generator_busy = False
            await feed.close()
        self._wake.set()

    async def _ingest_emit(self, events) -> None:
        await self._emit(events)
        # Feeding rows can arm a rendering deadline while _drive sleeps
        # without one; wake it to re-plan even when nothing surfaced yet.
        self._wake.set()

    # --- driving the session ----------------------------------------------------------

    async def _drive(self) -> None:
        session = self.session
        while True:
            wakeup = session.next_wakeup()
            timeout = None
            if wakeup is not None:
                timeout = max(0, wakeup - self.clock.now_ms()) / 1000
            try:
                await asyncio.wait_for(self._wake.wait(), timeout)
            except asyncio.TimeoutError:
                pass
            self._wake.clear()
            now = self.clock.now_ms()
            session.tick(now)
            session.poll(now)
            await self._emit(session.drain_outbox())

    async def _emit(self, events) -> None:
        if events:
            # A coalescing residue may now be pending; let _drive re-plan its
            # wakeup so the min_rendering_frequency flush lands on time.
            self._wake.set()
        for kind, payload in events:
            if kind == "changeset":
                message = protocol.changeset_message(payload)
            else:
                message = protocol.status_message(**payload)
            for client in list(self._clients):
                await self._send(client, message)
