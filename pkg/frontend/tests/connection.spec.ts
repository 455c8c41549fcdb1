import { describe, expect, it } from "vitest";

import { EngineConnection, type SocketLike } from "../src/connection";

class FakeSocket implements SocketLike {
    sent: string[] = [];
    closed = false;
    onopen: ((ev?: unknown) => void) | null = null;
    onmessage: ((ev: { data: unknown }) => void) | null = null;
    onclose: ((ev?: unknown) => void) | null = null;
    onerror: ((ev?: unknown) => void) | null = null;

    send(data: string): void {
        this.sent.push(data);
    }

    close(): void {
        this.closed = true;
        this.onclose?.();
    }
}

function connect() {
    let socket!: FakeSocket;
    const connection = new EngineConnection("ws://test/session", () => {
        socket = new FakeSocket();
        return socket;
    });
    return { connection, socket };
}

describe("EngineConnection", () => {
    it("queues sends until the socket opens, preserving order", () => {
        const { connection, socket } = connect();
        connection.send("a");
        connection.send("b");
        expect(socket.sent).toEqual([]);
        socket.onopen?.();
        expect(socket.sent).toEqual(["a", "b"]);
        connection.send("c");
        expect(socket.sent).toEqual(["a", "b", "c"]);
    });

    it("parses frames and dispatches them in arrival order", () => {
        const { connection, socket } = connect();
        const seen: string[] = [];
        connection.onFrame((frame) => seen.push(frame.type));
        socket.onopen?.();
        socket.onmessage?.({ data: '{"type":"status","status":"running","alive":true}' });
        socket.onmessage?.({ data: '{"type":"error","message":"nope"}' });
        expect(seen).toEqual(["status", "error"]);
    });

    it("reports status transitions", () => {
        const { connection, socket } = connect();
        const statuses: string[] = [];
        connection.onStatus((status) => statuses.push(status));
        expect(connection.status).toBe("connecting");
        socket.onopen?.();
        socket.onclose?.();
        expect(statuses).toEqual(["open", "closed"]);
        expect(connection.status).toBe("closed");
    });

    it("drops sends after close instead of throwing", () => {
        const { connection, socket } = connect();
        socket.onopen?.();
        socket.onclose?.();
        connection.send("late");
        expect(socket.sent).toEqual([]);
    });
});
