// Wire catalog for the engine's WebSocket endpoints. One JSON object per
// frame; client-built frames serialize compactly so they match the engine's
// own formatting byte for byte.

export interface WireRow {
    id: number;
    values: Record<string, unknown>;
}

export interface QualitySample {
    step: number;
    t_ms: number;
    absolute_progress: number | null;
    relative_progress: number | null;
    stability: number | null;
    certainty: number | null;
    etc_ms: number | null;
    alive: boolean;
}

export interface ChangedArea {
    x0: number;
    x1: number;
    y0: number;
    y1: number;
}

export interface ChangeReport {
    changed_ids: number[];
    changed_area: ChangedArea | null;
    highlight_duration: number | null;
}

export interface HelloFrame {
    type: "hello";
    spec: Record<string, unknown>;
    columns: string[];
    total_rows?: number;
}

export interface ChangesetFrame {
    type: "changeset";
    step: number;
    direction: "forward" | "backward";
    insert: WireRow[];
    update: WireRow[];
    remove: number[];
    quality: QualitySample | null;
    change_report: ChangeReport | null;
}

export interface StatusFrame {
    type: "status";
    status: "idle" | "running" | "paused" | "done" | "stopped";
    alive: boolean;
    warning?: string;
}

export interface SnapshotFrame {
    type: "snapshot";
    spec: Record<string, unknown>;
}

export interface ErrorFrame {
    type: "error";
    message: string;
    path?: string;
}

export type EngineFrame =
    | HelloFrame
    | ChangesetFrame
    | StatusFrame
    | SnapshotFrame
    | ErrorFrame;

const ENGINE_TYPES = new Set(["hello", "changeset", "status", "snapshot", "error"]);

export function parseFrame(data: string): EngineFrame {
    const frame = JSON.parse(data);
    if (typeof frame !== "object" || frame === null || Array.isArray(frame)) {
        throw new Error("frame is not an object");
    }
    if (!ENGINE_TYPES.has(frame.type)) {
        throw new Error(`unexpected frame type ${JSON.stringify(frame.type)}`);
    }
    return frame as EngineFrame;
}

// --- client -> engine ------------------------------------------------------

export type ControlAction =
    | "play"
    | "pause"
    | "stop"
    | "step_forward"
    | "step_backward";

export function controlFrame(action: ControlAction, params?: Record<string, unknown>): string {
    if (params === undefined) {
        return JSON.stringify({ type: "control", action });
    }
    return JSON.stringify({ type: "control", action, params });
}

export function setFrame(key: string, value: unknown): string {
    return JSON.stringify({ type: "set", key, value });
}

export function snapshotRequestFrame(): string {
    return JSON.stringify({ type: "snapshot_request" });
}
