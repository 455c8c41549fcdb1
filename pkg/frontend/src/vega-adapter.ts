import { changeset as vegaChangeset, type View } from "vega";
import vegaEmbed from "vega-embed";

import type { ChartAdapter, DataChange } from "./chart";

// Stock embedder behind the ChartAdapter seam. Updates go through vega's
// tuple-level modify so mark identity survives; remove-then-insert would
// re-enter every mark and defeat keyed updates.
export class VegaAdapter implements ChartAdapter {
    private view: View | null = null;

    async mount(container: HTMLElement, spec: Record<string, unknown>): Promise<void> {
        const result = await vegaEmbed(container, spec as never, { actions: false });
        this.view = result.view;
    }

    apply(change: DataChange): void {
        if (this.view === null) {
            return;
        }
        const cs = vegaChangeset();
        if (change.removeIds.length > 0) {
            const gone = new Set(change.removeIds);
            cs.remove((d: Record<string, unknown>) => gone.has(d.__id as number));
        }
        if (change.insert.length > 0) {
            cs.insert(change.insert);
        }
        if (change.modify.length > 0) {
            const byId = new Map(change.modify.map((rec) => [rec.__id as number, rec]));
            const live = this.view.data("table") as Record<string, unknown>[];
            for (const tuple of live) {
                const rec = byId.get(tuple.__id as number);
                if (rec === undefined) {
                    continue;
                }
                for (const [field, value] of Object.entries(rec)) {
                    if (field !== "__id") {
                        cs.modify(tuple, field, value);
                    }
                }
            }
        }
        this.view.change("table", cs).run();
    }

    xScale(value: number): number | null {
        return this.scaleValue("x", value);
    }

    yScale(value: number): number | null {
        return this.scaleValue("y", value);
    }

    destroy(): void {
        this.view?.finalize();
        this.view = null;
    }

    private scaleValue(name: string, value: number): number | null {
        if (this.view === null) {
            return null;
        }
        try {
            const scale = this.view.scale(name) as (v: number) => unknown;
            const out = scale(value);
            return typeof out === "number" && Number.isFinite(out) ? out : null;
        } catch {
            return null;
        }
    }
}
