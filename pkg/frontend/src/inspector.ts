import { setFrame } from "./protocol";
import type { InlineError, SessionView } from "./session";

// Keys the engine accepts over a live `set` message; everything else edits
// the local working document and takes effect on the next serve of it.
export const STEERABLE_KEYS = new Set(["frequency", "chunk_size", "min_rendering_frequency"]);

export type WidgetKind = "number" | "toggle" | "select" | "binding" | "highlight";

export interface WidgetSpec {
    key: string;
    path: string;
    kind: WidgetKind;
    doc: string;
    options?: string[];
    steerable?: boolean;
}

export const WIDGETS: WidgetSpec[] = [
    {
        key: "frequency",
        path: "provega.progression.chunking.reading.frequency",
        kind: "number",
        doc: "Milliseconds between progression steps.",
        steerable: true,
    },
    {
        key: "chunk_size",
        path: "provega.progression.chunking.reading.chunk_size",
        kind: "number",
        doc: "Rows read per chunk; remaining chunks are re-split on change.",
        steerable: true,
    },
    {
        key: "method",
        path: "provega.progression.chunking.reading.method",
        kind: "select",
        options: ["ascending", "descending", "random"],
        doc: "Order rows are read in.",
    },
    {
        key: "seed",
        path: "provega.progression.chunking.reading.seed",
        kind: "number",
        doc: "Seed fixing the random reading order; same seed, same order.",
    },
    {
        key: "mode",
        path: "provega.progression.control.mode",
        kind: "select",
        options: ["monitoring", "exploration"],
        doc: "monitoring plays automatically; exploration starts paused for stepping.",
    },
    {
        key: "pause",
        path: "provega.progression.control.pause",
        kind: "toggle",
        doc: "Allow pausing a running progression.",
    },
    {
        key: "stop",
        path: "provega.progression.control.stop",
        kind: "toggle",
        doc: "Allow stopping; a stopped progression cannot resume.",
    },
    {
        key: "step",
        path: "provega.progression.control.step",
        kind: "toggle",
        doc: "Allow manual step-forward and step-backward while paused.",
    },
    {
        key: "min_rendering_frequency",
        path: "provega.progression.control.min_rendering_frequency",
        kind: "number",
        doc: "Batch updates so renders are at least this many milliseconds apart.",
        steerable: true,
    },
    {
        key: "aliveness",
        path: "provega.progression.monitoring.aliveness",
        kind: "toggle",
        doc: "Show a heartbeat indicator while the session is making progress.",
    },
    {
        key: "progress",
        path: "provega.progression.monitoring.progress",
        kind: "toggle",
        doc: "Show the progress bar.",
    },
    {
        key: "etc",
        path: "provega.progression.monitoring.etc",
        kind: "toggle",
        doc: "Show the estimated time to completion.",
    },
    {
        key: "absolute_progress",
        path: "provega.progression.monitoring.quality.absolute_progress",
        kind: "binding",
        doc: "Fraction of the total work finished, from 0 to 1.",
    },
    {
        key: "relative_progress",
        path: "provega.progression.monitoring.quality.relative_progress",
        kind: "binding",
        doc: "Progress of the current phase, from 0 to 1.",
    },
    {
        key: "stability",
        path: "provega.progression.monitoring.quality.stability",
        kind: "binding",
        doc: "How little the result moved in the last step; 1 means settled.",
    },
    {
        key: "certainty",
        path: "provega.progression.monitoring.quality.certainty",
        kind: "binding",
        doc: "Confidence that the partial result resembles the final one.",
    },
    {
        key: "mark",
        path: "provega.progression.monitoring.change.mark",
        kind: "highlight",
        doc: "Flash marks whose rows changed in the last step.",
    },
    {
        key: "area",
        path: "provega.progression.monitoring.change.area",
        kind: "highlight",
        doc: "Outline the bounding box of the rows that changed.",
    },
    {
        key: "visual_stability",
        path: "provega.visualization.visual_stability",
        kind: "toggle",
        doc: "Key marks by row id so updates move marks instead of redrawing them.",
    },
];

export function docGet(doc: Record<string, unknown>, path: string): unknown {
    let node: unknown = doc;
    for (const part of path.split(".")) {
        if (typeof node !== "object" || node === null || Array.isArray(node)) {
            return undefined;
        }
        node = (node as Record<string, unknown>)[part];
    }
    return node;
}

export function docSet(doc: Record<string, unknown>, path: string, value: unknown): void {
    const parts = path.split(".");
    let node = doc;
    for (const part of parts.slice(0, -1)) {
        const next = node[part];
        if (typeof next !== "object" || next === null || Array.isArray(next)) {
            node[part] = {};
        }
        node = node[part] as Record<string, unknown>;
    }
    node[parts[parts.length - 1]] = value;
}

// mark/area accept both the boolean shorthand and the object form; read the
// effective on/off and write back in whichever form the document already uses.
function highlightEnabled(value: unknown): boolean {
    if (typeof value === "boolean") {
        return value;
    }
    if (typeof value === "object" && value !== null) {
        return (value as Record<string, unknown>).enabled !== false;
    }
    return false;
}

function writeHighlight(doc: Record<string, unknown>, path: string, on: boolean): void {
    const current = docGet(doc, path);
    if (typeof current === "object" && current !== null && !Array.isArray(current)) {
        (current as Record<string, unknown>).enabled = on;
    } else {
        docSet(doc, path, on);
    }
}

function bindingEnabled(value: unknown): boolean {
    return value !== undefined && value !== null && value !== "off";
}

export interface RunDecision {
    sets: { key: string; value: unknown }[];
    structural: boolean;
}

// Compares an edited document against the live one: steerable differences
// become `set` messages, anything else needs the session restarted.
export function planRun(
    before: Record<string, unknown>,
    after: Record<string, unknown>,
): RunDecision {
    const sets: { key: string; value: unknown }[] = [];
    const strippedBefore = structuredClone(before);
    const strippedAfter = structuredClone(after);
    for (const widget of WIDGETS) {
        if (!widget.steerable) {
            continue;
        }
        const was = docGet(before, widget.path);
        const now = docGet(after, widget.path);
        if (now !== undefined && now !== was) {
            sets.push({ key: widget.key, value: now });
        }
        docSet(strippedBefore, widget.path, null);
        docSet(strippedAfter, widget.path, null);
    }
    const structural = JSON.stringify(strippedBefore) !== JSON.stringify(strippedAfter);
    return { sets, structural };
}

export class Inspector {
    readonly element: HTMLElement;
    doc: Record<string, unknown> | null = null;

    private readonly dom: Document;
    private readonly send: (data: string) => void;
    private readonly inputs = new Map<string, HTMLInputElement | HTMLSelectElement>();
    private readonly errorSlots = new Map<string, HTMLElement>();
    private readonly togglePane: HTMLElement;
    private readonly advancedPane: HTMLElement;
    private readonly notice: HTMLElement;
    private readonly editor: HTMLTextAreaElement;
    private readonly editorError: HTMLElement;
    private readonly searchBox: HTMLInputElement;
    private lastSeenError: InlineError | null = null;
    private restartListeners: ((doc: Record<string, unknown>) => void)[] = [];

    constructor(send: (data: string) => void, view: SessionView | null, dom: Document) {
        this.send = send;
        this.dom = dom;
        this.element = dom.createElement("div");
        this.element.className = "inspector";

        const tabs = dom.createElement("div");
        tabs.className = "inspector-tabs";
        const toggleTab = this.tabButton(tabs, "Toggles", true);
        const advancedTab = this.tabButton(tabs, "Advanced", false);
        this.element.appendChild(tabs);

        this.notice = dom.createElement("div");
        this.notice.className = "inspector-notice";
        this.notice.hidden = true;
        this.element.appendChild(this.notice);

        this.togglePane = dom.createElement("div");
        this.togglePane.className = "inspector-toggles";
        this.element.appendChild(this.togglePane);
        for (const widget of WIDGETS) {
            this.togglePane.appendChild(this.buildWidget(widget));
        }

        this.advancedPane = dom.createElement("div");
        this.advancedPane.className = "inspector-advanced";
        this.advancedPane.hidden = true;
        const tools = dom.createElement("div");
        tools.className = "editor-tools";
        this.searchBox = dom.createElement("input");
        this.searchBox.className = "editor-search";
        this.searchBox.placeholder = "Search";
        this.searchBox.addEventListener("keydown", (ev) => {
            if ((ev as KeyboardEvent).key === "Enter") {
                this.findNext();
            }
        });
        const findButton = dom.createElement("button");
        findButton.textContent = "Find";
        findButton.addEventListener("click", () => this.findNext());
        const runButton = dom.createElement("button");
        runButton.textContent = "Run";
        runButton.className = "editor-run";
        runButton.title = "Apply the edited document (Ctrl+Enter)";
        runButton.addEventListener("click", () => this.runEditor());
        tools.append(this.searchBox, findButton, runButton);
        this.advancedPane.appendChild(tools);

        this.editor = dom.createElement("textarea");
        this.editor.className = "editor-text";
        this.editor.spellcheck = false;
        this.editor.addEventListener("keydown", (ev) => {
            const key = ev as KeyboardEvent;
            if (key.key === "Enter" && (key.ctrlKey || key.metaKey)) {
                key.preventDefault();
                this.runEditor();
            }
        });
        this.advancedPane.appendChild(this.editor);

        this.editorError = dom.createElement("div");
        this.editorError.className = "editor-error";
        this.editorError.hidden = true;
        this.advancedPane.appendChild(this.editorError);
        this.element.appendChild(this.advancedPane);

        toggleTab.addEventListener("click", () => this.showPane(toggleTab, advancedTab, false));
        advancedTab.addEventListener("click", () => this.showPane(advancedTab, toggleTab, true));

        if (view !== null) {
            view.onChange(() => {
                if (this.doc === null && view.spec !== null) {
                    this.loadDocument(view.spec);
                }
                if (view.lastError !== null && view.lastError !== this.lastSeenError) {
                    this.lastSeenError = view.lastError;
                    this.showError(view.lastError);
                }
            });
        }
    }

    onRestartNeeded(listener: (doc: Record<string, unknown>) => void): void {
        this.restartListeners.push(listener);
    }

    loadDocument(doc: Record<string, unknown>): void {
        this.doc = structuredClone(doc);
        this.notice.hidden = true;
        this.clearErrors();
        this.refreshWidgets();
        this.editor.value = JSON.stringify(this.doc, null, 2);
    }

    applyEdit(key: string, raw: string | boolean): void {
        if (this.doc === null) {
            return;
        }
        const widget = WIDGETS.find((w) => w.key === key);
        if (widget === undefined) {
            return;
        }
        this.clearErrors();
        let value: unknown = raw;
        if (widget.kind === "number") {
            const parsed = Number(raw);
            if (!Number.isInteger(parsed)) {
                this.showError({ message: "expected an integer", path: widget.key });
                return;
            }
            value = parsed;
        }
        if (widget.kind === "binding") {
            docSet(this.doc, widget.path, raw === true ? "builtin" : "off");
            this.structuralChange();
            return;
        }
        if (widget.kind === "highlight") {
            writeHighlight(this.doc, widget.path, raw === true);
            this.structuralChange();
            return;
        }
        docSet(this.doc, widget.path, value);
        if (widget.steerable) {
            this.send(setFrame(widget.key, value));
            this.editor.value = JSON.stringify(this.doc, null, 2);
        } else {
            this.structuralChange();
        }
    }

    runEditor(): void {
        if (this.doc === null) {
            return;
        }
        this.clearErrors();
        let edited: unknown;
        try {
            edited = JSON.parse(this.editor.value);
        } catch (e) {
            this.editorError.textContent = `not valid JSON: ${(e as Error).message}`;
            this.editorError.hidden = false;
            return;
        }
        if (typeof edited !== "object" || edited === null || Array.isArray(edited)) {
            this.editorError.textContent = "the document must be a JSON object";
            this.editorError.hidden = false;
            return;
        }
        const after = edited as Record<string, unknown>;
        const plan = planRun(this.doc, after);
        for (const { key, value } of plan.sets) {
            this.send(setFrame(key, value));
        }
        this.doc = structuredClone(after);
        this.refreshWidgets();
        if (plan.structural) {
            this.structuralChange();
        }
    }

    findNext(): void {
        const needle = this.searchBox.value;
        if (needle === "") {
            return;
        }
        const text = this.editor.value;
        const from = this.editor.selectionEnd ?? 0;
        let at = text.indexOf(needle, from);
        if (at < 0) {
            at = text.indexOf(needle);
        }
        if (at < 0) {
            return;
        }
        this.editor.focus();
        this.editor.setSelectionRange(at, at + needle.length);
    }

    showError(error: InlineError): void {
        if (error.path !== null) {
            for (const widget of WIDGETS) {
                const slot = this.errorSlots.get(widget.key);
                if (slot === undefined) {
                    continue;
                }
                if (widget.key === error.path || widget.path === error.path ||
                        widget.path.endsWith(`.${error.path}`)) {
                    slot.textContent = error.message;
                    slot.hidden = false;
                    return;
                }
            }
        }
        this.editorError.textContent =
            error.path === null ? error.message : `${error.path}: ${error.message}`;
        this.editorError.hidden = false;
    }

    clearErrors(): void {
        for (const slot of this.errorSlots.values()) {
            slot.hidden = true;
            slot.textContent = "";
        }
        this.editorError.hidden = true;
        this.editorError.textContent = "";
    }

    widgetInput(key: string): HTMLInputElement | HTMLSelectElement | undefined {
        return this.inputs.get(key);
    }

    get restartNoticeVisible(): boolean {
        return !this.notice.hidden;
    }

    showNotice(text: string): void {
        this.notice.textContent = text;
        this.notice.hidden = false;
    }

    private structuralChange(): void {
        this.showNotice(
            "Structural change: takes effect when the document is served again.");
        this.refreshWidgets();
        this.editor.value = JSON.stringify(this.doc, null, 2);
        for (const listener of this.restartListeners) {
            listener(this.doc as Record<string, unknown>);
        }
    }

    private refreshWidgets(): void {
        if (this.doc === null) {
            return;
        }
        for (const widget of WIDGETS) {
            const input = this.inputs.get(widget.key);
            if (input === undefined) {
                continue;
            }
            const value = docGet(this.doc, widget.path);
            switch (widget.kind) {
                case "number":
                    (input as HTMLInputElement).value =
                        typeof value === "number" ? String(value) : "";
                    break;
                case "select":
                    if (typeof value === "string") {
                        (input as HTMLSelectElement).value = value;
                    }
                    break;
                case "toggle":
                    (input as HTMLInputElement).checked = value === true;
                    break;
                case "binding":
                    (input as HTMLInputElement).checked = bindingEnabled(value);
                    break;
                case "highlight":
                    (input as HTMLInputElement).checked = highlightEnabled(value);
                    break;
            }
        }
    }

    private buildWidget(widget: WidgetSpec): HTMLElement {
        const dom = this.dom;
        const row = dom.createElement("label");
        row.className = "widget";
        row.dataset.path = widget.path;
        const name = dom.createElement("span");
        name.className = "widget-name";
        name.textContent = widget.key;
        name.title = widget.doc;
        row.appendChild(name);

        let input: HTMLInputElement | HTMLSelectElement;
        if (widget.kind === "select") {
            input = dom.createElement("select");
            for (const option of widget.options ?? []) {
                const el = dom.createElement("option");
                el.value = option;
                el.textContent = option;
                input.appendChild(el);
            }
            input.addEventListener("change", () => this.applyEdit(widget.key, input.value));
        } else if (widget.kind === "number") {
            input = dom.createElement("input");
            input.type = "number";
            input.min = "1";
            input.addEventListener("change", () => this.applyEdit(widget.key, input.value));
        } else {
            input = dom.createElement("input");
            input.type = "checkbox";
            input.addEventListener("change", () =>
                this.applyEdit(widget.key, (input as HTMLInputElement).checked));
        }
        input.title = widget.doc;
        input.dataset.key = widget.key;
        this.inputs.set(widget.key, input);
        row.appendChild(input);

        const error = dom.createElement("span");
        error.className = "widget-error";
        error.hidden = true;
        this.errorSlots.set(widget.key, error);
        row.appendChild(error);
        return row;
    }

    private showPane(active: HTMLButtonElement, inactive: HTMLButtonElement,
                     advanced: boolean): void {
        active.classList.add("active");
        inactive.classList.remove("active");
        this.advancedPane.hidden = !advanced;
        this.togglePane.hidden = advanced;
    }

    private tabButton(parent: HTMLElement, label: string, active: boolean): HTMLButtonElement {
        const button = this.dom.createElement("button");
        button.textContent = label;
        if (active) {
            button.classList.add("active");
        }
        parent.appendChild(button);
        return button;
    }
}
