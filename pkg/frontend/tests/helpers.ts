import type {
    ChangesetFrame,
    HelloFrame,
    QualitySample,
    StatusFrame,
    WireRow,
} from "../src/protocol";
import type { EngineStatus } from "../src/session";

export function row(id: number, values: Record<string, unknown>): WireRow {
    return { id, values };
}

export function helloFrame(
    spec: Record<string, unknown>,
    columns: string[] = ["x", "y"],
    totalRows?: number,
): HelloFrame {
    const frame: HelloFrame = { type: "hello", spec, columns };
    if (totalRows !== undefined) {
        frame.total_rows = totalRows;
    }
    return frame;
}

export function changesetFrame(over: Partial<ChangesetFrame> = {}): ChangesetFrame {
    return {
        type: "changeset",
        step: 0,
        direction: "forward",
        insert: [],
        update: [],
        remove: [],
        quality: null,
        change_report: null,
        ...over,
    };
}

export function statusFrame(status: EngineStatus, alive = true, warning?: string): StatusFrame {
    const frame: StatusFrame = { type: "status", status, alive };
    if (warning !== undefined) {
        frame.warning = warning;
    }
    return frame;
}

export function sample(over: Partial<QualitySample> = {}): QualitySample {
    return {
        step: 0,
        t_ms: 0,
        absolute_progress: null,
        relative_progress: null,
        stability: null,
        certainty: null,
        etc_ms: null,
        alive: true,
        ...over,
    };
}

// A compact normalized document the way the engine would serve it.
export function normalizedDoc(): Record<string, unknown> {
    return {
        data: { url: "data.csv" },
        mark: "point",
        encoding: {
            x: { field: "x", type: "quantitative" },
            y: { field: "y", type: "quantitative" },
        },
        provega: {
            progression: {
                chunking: {
                    type: "data",
                    reading: {
                        method: "ascending",
                        chunk_size: 100,
                        frequency: 250,
                        seed: 0,
                    },
                },
                control: {
                    pause: true,
                    stop: true,
                    step: true,
                    mode: "monitoring",
                    ack: { enabled: false, window: 1 },
                },
                monitoring: {
                    aliveness: true,
                    progress: true,
                    etc: true,
                    quality: {
                        absolute_progress: "builtin",
                        relative_progress: "off",
                        stability: "off",
                        certainty: "off",
                    },
                    change: {
                        mark: { enabled: true, highlight_duration: 600 },
                        area: { enabled: true, highlight_duration: 450 },
                    },
                },
            },
            visualization: { visual_stability: true },
        },
    };
}
