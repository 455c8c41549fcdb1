import type { ChangedArea, ChangesetFrame, WireRow } from "./protocol";

export const DEFAULT_HIGHLIGHT_MS = 600;
export const FLASH_COLOR = "#ffd60a";

export interface DataChange {
    insert: Record<string, unknown>[];
    // Merged field-by-field into the record with the same __id; ids that are
    // no longer in the dataset are ignored, never re-inserted.
    modify: Record<string, unknown>[];
    removeIds: number[];
}

export interface ChartAdapter {
    mount(container: HTMLElement, spec: Record<string, unknown>): Promise<void> | void;
    apply(change: DataChange): void;
    xScale(value: number): number | null;
    yScale(value: number): number | null;
    destroy(): void;
}

export interface ChartOptions {
    markFlash: boolean;
    areaOverlay: boolean;
}

function highlightOn(value: unknown): boolean {
    if (typeof value === "boolean") {
        return value;
    }
    if (typeof value === "object" && value !== null) {
        return (value as Record<string, unknown>).enabled !== false;
    }
    return false;
}

export function chartOptionsFromDoc(doc: Record<string, unknown>): ChartOptions {
    const provega = (doc.provega ?? {}) as Record<string, unknown>;
    const progression = (provega.progression ?? {}) as Record<string, unknown>;
    const monitoring = (progression.monitoring ?? {}) as Record<string, unknown>;
    const change = (monitoring.change ?? {}) as Record<string, unknown>;
    return {
        markFlash: highlightOn(change.mark),
        areaOverlay: highlightOn(change.area),
    };
}

// The renderable view: the document minus the progression block, reading from
// a named dataset the adapter mutates in place. With mark flashing on, the
// color channel gets a condition so freshly changed rows blink.
export function chartSpec(
    doc: Record<string, unknown>,
    options: ChartOptions,
): Record<string, unknown> {
    const spec: Record<string, unknown> = {};
    for (const [key, value] of Object.entries(doc)) {
        if (key !== "provega") {
            spec[key] = structuredClone(value);
        }
    }
    spec.data = { name: "table" };
    if (options.markFlash) {
        const encoding = (spec.encoding ?? {}) as Record<string, unknown>;
        const color = (encoding.color ?? {}) as Record<string, unknown>;
        encoding.color = {
            condition: { test: "datum.__flash === true", value: FLASH_COLOR },
            ...color,
        };
        spec.encoding = encoding;
    }
    return spec;
}

export class ProgressiveChart {
    readonly element: HTMLElement;
    readonly overlay: HTMLElement;

    private readonly adapter: ChartAdapter;
    private options: ChartOptions = { markFlash: false, areaOverlay: false };
    private ready = false;
    private readonly queued: ChangesetFrame[] = [];
    private readonly flashGen = new Map<number, number>();
    private nextGen = 0;
    private areaGen = 0;

    constructor(adapter: ChartAdapter, dom: Document) {
        this.adapter = adapter;
        this.element = dom.createElement("div");
        this.element.className = "chart";
        this.overlay = dom.createElement("div");
        this.overlay.className = "change-area";
        this.overlay.hidden = true;
        this.element.appendChild(this.overlay);
    }

    async mount(doc: Record<string, unknown>): Promise<void> {
        this.options = chartOptionsFromDoc(doc);
        const host = this.element.ownerDocument.createElement("div");
        host.className = "chart-host";
        this.element.insertBefore(host, this.overlay);
        await this.adapter.mount(host, chartSpec(doc, this.options));
        this.ready = true;
        for (const frame of this.queued.splice(0)) {
            this.applyFrame(frame);
        }
    }

    // Frames arriving before the embedder resolves are held and replayed so
    // the catchup changeset right behind hello is never dropped.
    applyFrame(frame: ChangesetFrame): void {
        if (!this.ready) {
            this.queued.push(frame);
            return;
        }
        const report = frame.change_report;
        const flashing = this.options.markFlash && report !== null &&
            report.changed_ids.length > 0;
        const flashIds = flashing ? new Set(report!.changed_ids) : null;
        const removed = new Set(frame.remove);
        this.adapter.apply({
            insert: frame.insert.map((row) => this.record(row, flashIds)),
            modify: frame.update.map((row) => this.record(row, flashIds)),
            removeIds: frame.remove.slice(),
        });
        const duration = report?.highlight_duration ?? DEFAULT_HIGHLIGHT_MS;
        if (flashIds !== null) {
            const gen = ++this.nextGen;
            const ids: number[] = [];
            for (const id of flashIds) {
                if (!removed.has(id)) {
                    this.flashGen.set(id, gen);
                    ids.push(id);
                }
            }
            setTimeout(() => this.unflash(ids, gen), duration);
        }
        if (this.options.areaOverlay && report?.changed_area != null) {
            this.showArea(report.changed_area, duration);
        }
    }

    destroy(): void {
        this.adapter.destroy();
        this.element.remove();
    }

    private record(row: WireRow, flashIds: Set<number> | null): Record<string, unknown> {
        const rec: Record<string, unknown> = { __id: row.id, ...row.values };
        if (flashIds !== null && flashIds.has(row.id)) {
            rec.__flash = true;
        }
        return rec;
    }

    // A later flash on the same row wins; only rows still owned by this
    // generation get turned off.
    private unflash(ids: number[], gen: number): void {
        const clear = ids.filter((id) => this.flashGen.get(id) === gen);
        if (clear.length === 0) {
            return;
        }
        for (const id of clear) {
            this.flashGen.delete(id);
        }
        this.adapter.apply({
            insert: [],
            modify: clear.map((id) => ({ __id: id, __flash: false })),
            removeIds: [],
        });
    }

    private showArea(area: ChangedArea, duration: number): void {
        const xs = [this.adapter.xScale(area.x0), this.adapter.xScale(area.x1)];
        const ys = [this.adapter.yScale(area.y0), this.adapter.yScale(area.y1)];
        if (xs.some((v) => v === null) || ys.some((v) => v === null)) {
            return;
        }
        const [x0, x1] = (xs as number[]).sort((a, b) => a - b);
        const [y0, y1] = (ys as number[]).sort((a, b) => a - b);
        this.overlay.style.left = `${x0}px`;
        this.overlay.style.top = `${y0}px`;
        this.overlay.style.width = `${Math.max(x1 - x0, 1)}px`;
        this.overlay.style.height = `${Math.max(y1 - y0, 1)}px`;
        this.overlay.hidden = false;
        const gen = ++this.areaGen;
        setTimeout(() => {
            if (gen === this.areaGen) {
                this.overlay.hidden = true;
            }
        }, duration);
    }
}
