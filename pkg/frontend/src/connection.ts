import { parseFrame, type EngineFrame } from "./protocol";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface SocketLike {
    send(data: string): void;
    close(): void;
    onopen: ((ev?: unknown) => void) | null;
    onmessage: ((ev: { data: unknown }) => void) | null;
    onclose: ((ev?: unknown) => void) | null;
    onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

const browserSocket: SocketFactory = (url) => new WebSocket(url) as unknown as SocketLike;

// Single ordered pipe to the engine. Frames are dispatched in arrival order;
// sends while the socket is still connecting are queued, never dropped.
export class EngineConnection {
    status: ConnectionStatus = "connecting";
    private socket: SocketLike;
    private readonly pending: string[] = [];
    private readonly listeners: ((frame: EngineFrame) => void)[] = [];
    private readonly statusListeners: ((status: ConnectionStatus) => void)[] = [];

    constructor(url: string, factory: SocketFactory = browserSocket) {
        this.socket = factory(url);
        this.socket.onopen = () => {
            this.status = "open";
            for (const data of this.pending.splice(0)) {
                this.socket.send(data);
            }
            this.notifyStatus();
        };
        this.socket.onmessage = (ev) => {
            const frame = parseFrame(String(ev.data));
            for (const listener of this.listeners) {
                listener(frame);
            }
        };
        this.socket.onclose = () => {
            this.status = "closed";
            this.notifyStatus();
        };
        this.socket.onerror = () => {
            if (this.status === "connecting") {
                this.status = "closed";
                this.notifyStatus();
            }
        };
    }

    onFrame(listener: (frame: EngineFrame) => void): void {
        this.listeners.push(listener);
    }

    onStatus(listener: (status: ConnectionStatus) => void): void {
        this.statusListeners.push(listener);
    }

    send(data: string): void {
        if (this.status === "open") {
            this.socket.send(data);
        } else if (this.status === "connecting") {
            this.pending.push(data);
        }
    }

    close(): void {
        this.socket.close();
    }

    private notifyStatus(): void {
        for (const listener of this.statusListeners) {
            listener(this.status);
        }
    }
}
