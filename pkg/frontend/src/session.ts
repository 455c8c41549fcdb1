import type {
    ChangeReport,
    EngineFrame,
    QualitySample,
} from "./protocol";
import { Replica } from "./replica";

export type EngineStatus = "idle" | "running" | "paused" | "done" | "stopped";

export interface InlineError {
    message: string;
    path: string | null;
}

// Everything a panel might render about the live session, folded from the
// frame stream in arrival order. Connection state lives on EngineConnection;
// this tracks what the engine itself reported.
export class SessionView {
    readonly replica = new Replica();
    spec: Record<string, unknown> | null = null;
    columns: string[] = [];
    totalRows: number | null = null;
    status: EngineStatus = "idle";
    alive = true;
    warning: string | null = null;
    lastError: InlineError | null = null;
    lastReport: ChangeReport | null = null;
    lastSample: QualitySample | null = null;
    readonly qualitySeries: QualitySample[] = [];
    snapshotSpec: Record<string, unknown> | null = null;

    private readonly listeners: (() => void)[] = [];

    onChange(listener: () => void): void {
        this.listeners.push(listener);
    }

    get step(): number {
        return this.replica.step;
    }

    get rowCount(): number {
        return this.replica.rowCount;
    }

    fold(frame: EngineFrame): void {
        switch (frame.type) {
            case "hello":
                this.spec = frame.spec;
                this.columns = frame.columns;
                this.totalRows = frame.total_rows ?? null;
                break;
            case "changeset":
                this.replica.apply(frame);
                this.lastReport = frame.change_report;
                if (frame.quality !== null) {
                    this.lastSample = frame.quality;
                    this.qualitySeries.push(frame.quality);
                }
                break;
            case "status":
                this.status = frame.status;
                this.alive = frame.alive;
                this.warning = frame.warning ?? null;
                break;
            case "snapshot":
                this.snapshotSpec = frame.spec;
                break;
            case "error":
                this.lastError = { message: frame.message, path: frame.path ?? null };
                break;
        }
        for (const listener of this.listeners) {
            listener();
        }
    }
}
