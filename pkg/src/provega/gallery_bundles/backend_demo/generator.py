#!/usr/bin/env python3
"""Reference generator: streams synthetic chunks to the engine over WebSocket.

Start the generator first, then point the engine at it; the bundle's spec
already names ws://127.0.0.1:7879/feed as its data source:

    python generator.py --port 7879 &
    provega serve --spec spec.json

By default the generator is a compliant window-1 peer: it waits for ack{b}
before sending batch b+1. --ignore-acks floods instead, which is useful for
exercising the engine's backpressure. Rows carry x, y, and a rising conf
column that the spec binds to the certainty indicator.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import random

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed


def make_rows(rng: random.Random, count: int, start: int, total: int) -> list[dict]:
    rows = []
    for i in range(count):
        cx, cy = (-1.5, 1.0) if rng.random() < 0.5 else (1.5, -1.0)
        index = start + i
        rows.append({
            "x": round(rng.gauss(cx, 0.5), 4),
            "y": round(rng.gauss(cy, 0.5), 4),
            "conf": round(min(1.0, 0.2 + 0.8 * (index + 1) / total), 4),
        })
    return rows


async def stream(ws, args) -> None:
    rng = random.Random(args.seed)
    total = args.batches * args.chunk_size
    drain = None
    if args.ignore_acks:
        drain = asyncio.create_task(_drain(ws))
    try:
        for batch in range(args.batches):
            rows = make_rows(rng, args.chunk_size, batch * args.chunk_size, total)
            frame = {"type": "chunk", "batch": batch, "rows": rows}
            await ws.send(json.dumps(frame, separators=(",", ":")))
            if not args.ignore_acks:
                reply = json.loads(await ws.recv())
                if reply.get("type") != "ack" or reply.get("batch") != batch:
                    print(f"unexpected reply: {reply}", flush=True)
                    return
            if args.delay:
                await asyncio.sleep(args.delay / 1000)
        await ws.send(json.dumps({"type": "end"}, separators=(",", ":")))
        await ws.wait_closed()
    except ConnectionClosed:
        pass
    finally:
        if drain is not None:
            drain.cancel()


async def _drain(ws) -> None:
    try:
        async for _ in ws:
            pass
    except ConnectionClosed:
        pass


async def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=7879)
    parser.add_argument("--batches", type=int, default=60)
    parser.add_argument("--chunk-size", type=int, default=25, dest="chunk_size")
    parser.add_argument("--delay", type=int, default=330,
                        help="milliseconds between batches")
    parser.add_argument("--seed", type=int, default=4)
    parser.add_argument("--ignore-acks", action="store_true", dest="ignore_acks",
                        help="flood without waiting for acknowledgments")
    parser.add_argument("--once", action="store_true",
                        help="exit after serving one client")
    args = parser.parse_args()

    finished = asyncio.Event()

    async def handler(ws):
        await stream(ws, args)
        if args.once:
            finished.set()

    async with serve(handler, args.host, args.port):
        print(f"generator listening on ws://{args.host}:{args.port}/feed",
              flush=True)
        if args.once:
            await finished.wait()
        else:
            await asyncio.Event().wait()


if __name__ == "__main__":
    asyncio.run(main())
