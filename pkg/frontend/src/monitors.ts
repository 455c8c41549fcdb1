import type { EngineStatus, SessionView } from "./session";

const SVG_NS = "http://www.w3.org/2000/svg";
const METRICS = ["absolute_progress", "relative_progress", "stability", "certainty"] as const;

export function formatEtc(etcMs: number | null, status: EngineStatus): string {
    if (status === "done") {
        return "done";
    }
    if (etcMs === null) {
        return "—";
    }
    if (etcMs < 1000) {
        return `${Math.round(etcMs)} ms`;
    }
    return `${(etcMs / 1000).toFixed(1)} s`;
}

// Polyline points for one metric's history, mapped into a w x h box; metric
// values are fractions in [0, 1] and y grows downward in SVG.
export function sparklinePoints(
    values: (number | null)[],
    width: number,
    height: number,
): string {
    const kept = values.filter((v): v is number => v !== null);
    if (kept.length === 0) {
        return "";
    }
    const step = kept.length > 1 ? width / (kept.length - 1) : 0;
    return kept
        .map((v, i) => {
            const x = kept.length > 1 ? i * step : width / 2;
            const y = height - Math.min(Math.max(v, 0), 1) * height;
            return `${x.toFixed(1)},${y.toFixed(1)}`;
        })
        .join(" ");
}

interface MonitorFlags {
    progress: boolean;
    aliveness: boolean;
    etc: boolean;
}

function monitorFlags(doc: Record<string, unknown> | null): MonitorFlags {
    const provega = (doc?.provega ?? {}) as Record<string, unknown>;
    const progression = (provega.progression ?? {}) as Record<string, unknown>;
    const monitoring = (progression.monitoring ?? {}) as Record<string, unknown>;
    return {
        progress: monitoring.progress === true,
        aliveness: monitoring.aliveness === true,
        etc: monitoring.etc === true,
    };
}

export class MonitorPanel {
    readonly element: HTMLElement;

    private readonly statusBadge: HTMLElement;
    private readonly stepLabel: HTMLElement;
    private readonly rowsLabel: HTMLElement;
    private readonly warningLabel: HTMLElement;
    private readonly progressTrack: HTMLElement;
    private readonly progressFill: HTMLElement;
    private readonly spinner: HTMLElement;
    private readonly etcLabel: HTMLElement;
    private readonly qualityStrip: HTMLElement;
    private readonly qualityCells = new Map<string, { cell: HTMLElement; line: SVGPolylineElement; value: HTMLElement }>();
    private flags: MonitorFlags = { progress: false, aliveness: false, etc: false };

    constructor(dom: Document) {
        this.element = dom.createElement("div");
        this.element.className = "monitors";

        const statusLine = dom.createElement("div");
        statusLine.className = "status-line";
        this.statusBadge = dom.createElement("span");
        this.statusBadge.className = "status-badge";
        this.spinner = dom.createElement("span");
        this.spinner.className = "spinner";
        this.spinner.textContent = "●";
        this.stepLabel = dom.createElement("span");
        this.stepLabel.className = "step-label";
        this.rowsLabel = dom.createElement("span");
        this.rowsLabel.className = "rows-label";
        this.etcLabel = dom.createElement("span");
        this.etcLabel.className = "etc-label";
        statusLine.append(this.statusBadge, this.spinner, this.stepLabel,
                          this.rowsLabel, this.etcLabel);
        this.element.appendChild(statusLine);

        this.progressTrack = dom.createElement("div");
        this.progressTrack.className = "progress-track";
        this.progressFill = dom.createElement("div");
        this.progressFill.className = "progress-fill";
        this.progressTrack.appendChild(this.progressFill);
        this.element.appendChild(this.progressTrack);

        this.warningLabel = dom.createElement("div");
        this.warningLabel.className = "warning-label";
        this.warningLabel.hidden = true;
        this.element.appendChild(this.warningLabel);

        this.qualityStrip = dom.createElement("div");
        this.qualityStrip.className = "quality-strip";
        for (const metric of METRICS) {
            const cell = dom.createElement("div");
            cell.className = "quality-cell";
            cell.hidden = true;
            const name = dom.createElement("span");
            name.className = "quality-name";
            name.textContent = metric.replace("_", " ");
            const svg = dom.createElementNS(SVG_NS, "svg") as SVGSVGElement;
            svg.setAttribute("viewBox", "0 0 96 24");
            svg.setAttribute("width", "96");
            svg.setAttribute("height", "24");
            const line = dom.createElementNS(SVG_NS, "polyline") as SVGPolylineElement;
            line.setAttribute("fill", "none");
            svg.appendChild(line);
            const value = dom.createElement("span");
            value.className = "quality-value";
            cell.append(name, svg, value);
            this.qualityCells.set(metric, { cell, line, value });
            this.qualityStrip.appendChild(cell);
        }
        this.element.appendChild(this.qualityStrip);
    }

    configure(doc: Record<string, unknown> | null): void {
        this.flags = monitorFlags(doc);
        this.progressTrack.hidden = !this.flags.progress;
        this.spinner.hidden = !this.flags.aliveness;
        this.etcLabel.hidden = !this.flags.etc;
    }

    render(view: SessionView): void {
        this.statusBadge.textContent = view.status;
        this.statusBadge.dataset.status = view.status;
        this.stepLabel.textContent = view.step >= 0 ? `step ${view.step}` : "";
        this.rowsLabel.textContent = `${view.rowCount.toLocaleString("en-US")} rows`;
        this.warningLabel.hidden = view.warning === null;
        this.warningLabel.textContent = view.warning ?? "";

        if (this.flags.aliveness) {
            this.spinner.classList.toggle("alive", view.alive && view.status === "running");
        }
        if (this.flags.etc) {
            this.etcLabel.textContent =
                `ETC ${formatEtc(view.lastSample?.etc_ms ?? null, view.status)}`;
        }
        if (this.flags.progress) {
            let fraction = view.lastSample?.absolute_progress ?? null;
            if (fraction === null && view.totalRows !== null && view.totalRows > 0) {
                fraction = Math.min(view.rowCount / view.totalRows, 1);
            }
            if (fraction === null) {
                this.progressFill.style.width = "100%";
                this.progressTrack.dataset.state = "indeterminate";
            } else {
                this.progressFill.style.width = `${(fraction * 100).toFixed(1)}%`;
                this.progressTrack.dataset.state = "measured";
            }
        }

        for (const metric of METRICS) {
            const slot = this.qualityCells.get(metric)!;
            const series = view.qualitySeries.map(
                (s) => s[metric] as number | null,
            );
            const points = sparklinePoints(series, 96, 24);
            slot.cell.hidden = points === "";
            if (points !== "") {
                slot.line.setAttribute("points", points);
                const last = [...series].reverse().find((v) => v !== null);
                slot.value.textContent = last !== undefined && last !== null
                    ? last.toFixed(2) : "";
            }
        }
    }
}
