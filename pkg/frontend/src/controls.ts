import type { EngineConnection } from "./connection";
import { controlFrame, type ControlAction } from "./protocol";
import type { SessionView } from "./session";

export interface ControlPermissions {
    pause: boolean;
    stop: boolean;
    step: boolean;
    mode: "monitoring" | "exploration";
}

// Defaults match the engine's normalization: pause and stop are opt-out,
// stepping is opt-in, and exploration mode implies stepping unless the
// document explicitly disabled it.
export function permissionsFromSpec(spec: Record<string, unknown> | null): ControlPermissions {
    const control = specControlBlock(spec);
    const mode = control.mode === "exploration" ? "exploration" : "monitoring";
    return {
        pause: control.pause !== false,
        stop: control.stop !== false,
        step: control.step === true || (mode === "exploration" && control.step !== false),
        mode,
    };
}

function specControlBlock(spec: Record<string, unknown> | null): Record<string, unknown> {
    const provega = (spec?.provega ?? {}) as Record<string, unknown>;
    const progression = (provega.progression ?? {}) as Record<string, unknown>;
    return (progression.control ?? {}) as Record<string, unknown>;
}

// Mirrors the engine's transition table so a click can never draw an
// IllegalTransitionError: disabled buttons are exactly the illegal moves.
export function enabledActions(view: SessionView, perms: ControlPermissions): Set<ControlAction> {
    const enabled = new Set<ControlAction>();
    const status = view.status;
    if (status === "paused") {
        enabled.add("play");
    }
    if (status === "running" && perms.pause) {
        enabled.add("pause");
    }
    if ((status === "running" || status === "paused" || status === "idle") && perms.stop) {
        enabled.add("stop");
    }
    if (perms.step && status === "paused") {
        enabled.add("step_forward");
    }
    if (perms.step && view.step >= 0 &&
        (status === "paused" || status === "done" || status === "stopped")) {
        enabled.add("step_backward");
    }
    return enabled;
}

const BUTTONS: { action: ControlAction; label: string; title: string }[] = [
    { action: "play", label: "▶", title: "Resume automatic progression" },
    { action: "pause", label: "⏸", title: "Hold the progression at the current step" },
    { action: "step_forward", label: "⏩", title: "Advance exactly one step" },
    { action: "step_backward", label: "⏪", title: "Undo the most recent step" },
    { action: "stop", label: "⏹", title: "End the progression (cannot be resumed)" },
];

export class ControlBar {
    readonly element: HTMLElement;
    private readonly buttons = new Map<ControlAction, HTMLButtonElement>();

    constructor(
        private readonly connection: EngineConnection,
        private readonly view: SessionView,
        document: Document,
    ) {
        this.element = document.createElement("div");
        this.element.className = "control-bar";
        for (const { action, label, title } of BUTTONS) {
            const button = document.createElement("button");
            button.textContent = label;
            button.title = title;
            button.dataset.action = action;
            button.addEventListener("click", () => this.send(action));
            this.buttons.set(action, button);
            this.element.appendChild(button);
        }
        view.onChange(() => this.refresh());
        this.refresh();
    }

    refresh(): void {
        const enabled = enabledActions(this.view, permissionsFromSpec(this.view.spec));
        for (const [action, button] of this.buttons) {
            button.disabled = !enabled.has(action);
        }
    }

    private send(action: ControlAction): void {
        this.connection.send(controlFrame(action));
    }
}
