export interface Snapshot {
    name: string;
    // The document exactly as serialized at save time; restore parses it and
    // re-serializing the parse must reproduce this string byte for byte.
    spec: string;
    created_at: string;
    favorite: boolean;
}

export interface SnapshotStore {
    load(): Snapshot[];
    save(snapshots: Snapshot[]): void;
}

const STORAGE_KEY = "provega.snapshots";

export class LocalSnapshotStore implements SnapshotStore {
    load(): Snapshot[] {
        try {
            const raw = localStorage.getItem(STORAGE_KEY);
            return raw === null ? [] : (JSON.parse(raw) as Snapshot[]);
        } catch {
            return [];
        }
    }

    save(snapshots: Snapshot[]): void {
        localStorage.setItem(STORAGE_KEY, JSON.stringify(snapshots));
    }
}

export class MemorySnapshotStore implements SnapshotStore {
    private snapshots: Snapshot[] = [];

    load(): Snapshot[] {
        return this.snapshots.map((s) => ({ ...s }));
    }

    save(snapshots: Snapshot[]): void {
        this.snapshots = snapshots.map((s) => ({ ...s }));
    }
}

export interface SnapshotHooks {
    // Asks the engine for its current document; the snapshot frame that comes
    // back completes the save.
    requestSpec: () => void;
    onRestore: (doc: Record<string, unknown>, raw: string) => void;
}

export class SnapshotPanel {
    readonly element: HTMLElement;
    snapshots: Snapshot[];

    private readonly store: SnapshotStore;
    private readonly hooks: SnapshotHooks;
    private readonly dom: Document;
    private readonly nameBox: HTMLInputElement;
    private readonly list: HTMLElement;
    private pendingName: string | null = null;

    constructor(store: SnapshotStore, hooks: SnapshotHooks, dom: Document) {
        this.store = store;
        this.hooks = hooks;
        this.dom = dom;
        this.snapshots = store.load();

        this.element = dom.createElement("div");
        this.element.className = "snapshots";
        const bar = dom.createElement("div");
        bar.className = "snapshot-bar";
        this.nameBox = dom.createElement("input");
        this.nameBox.placeholder = "Snapshot name";
        const save = dom.createElement("button");
        save.textContent = "Save";
        save.title = "Capture the engine's current document as a snapshot";
        save.addEventListener("click", () => this.beginSave(this.nameBox.value));
        bar.append(this.nameBox, save);
        this.element.appendChild(bar);

        this.list = dom.createElement("ul");
        this.list.className = "snapshot-list";
        this.element.appendChild(this.list);
        this.render();
    }

    beginSave(name: string): void {
        this.pendingName = name.trim() || `snapshot ${this.snapshots.length + 1}`;
        this.hooks.requestSpec();
    }

    // Called when a snapshot frame arrives; a frame nobody asked for is the
    // engine answering someone else and is ignored.
    completeSave(spec: Record<string, unknown>): Snapshot | null {
        if (this.pendingName === null) {
            return null;
        }
        const snapshot = this.add(this.pendingName, spec);
        this.pendingName = null;
        this.nameBox.value = "";
        return snapshot;
    }

    add(name: string, spec: Record<string, unknown>): Snapshot {
        const snapshot: Snapshot = {
            name,
            spec: JSON.stringify(spec),
            created_at: new Date().toISOString(),
            favorite: false,
        };
        this.snapshots.push(snapshot);
        this.persist();
        return snapshot;
    }

    restore(index: number): { doc: Record<string, unknown>; raw: string } | null {
        const snapshot = this.snapshots[index];
        if (snapshot === undefined) {
            return null;
        }
        const doc = JSON.parse(snapshot.spec) as Record<string, unknown>;
        this.hooks.onRestore(doc, snapshot.spec);
        return { doc, raw: snapshot.spec };
    }

    reserialize(index: number): string {
        return JSON.stringify(JSON.parse(this.snapshots[index].spec));
    }

    rename(index: number, name: string): void {
        this.snapshots[index].name = name;
        this.persist();
    }

    toggleFavorite(index: number): void {
        this.snapshots[index].favorite = !this.snapshots[index].favorite;
        this.persist();
    }

    remove(index: number): void {
        this.snapshots.splice(index, 1);
        this.persist();
    }

    exportPayload(index: number): { filename: string; text: string } {
        const snapshot = this.snapshots[index];
        const safe = snapshot.name.replace(/[^\w.-]+/g, "_") || "snapshot";
        return { filename: `${safe}.json`, text: snapshot.spec };
    }

    // Favorites float to the top; within a group, newest first.
    displayOrder(): number[] {
        return this.snapshots
            .map((_, i) => i)
            .sort((a, b) => {
                const fa = this.snapshots[a].favorite ? 0 : 1;
                const fb = this.snapshots[b].favorite ? 0 : 1;
                if (fa !== fb) {
                    return fa - fb;
                }
                return this.snapshots[b].created_at.localeCompare(
                    this.snapshots[a].created_at) || b - a;
            });
    }

    render(): void {
        this.list.textContent = "";
        for (const index of this.displayOrder()) {
            this.list.appendChild(this.buildItem(index));
        }
    }

    private persist(): void {
        this.store.save(this.snapshots);
        this.render();
    }

    private buildItem(index: number): HTMLElement {
        const snapshot = this.snapshots[index];
        const dom = this.dom;
        const item = dom.createElement("li");
        item.dataset.name = snapshot.name;

        const star = dom.createElement("button");
        star.className = "snapshot-star";
        star.textContent = snapshot.favorite ? "★" : "☆";
        star.title = "Favorite";
        star.addEventListener("click", () => this.toggleFavorite(index));

        const name = dom.createElement("button");
        name.className = "snapshot-name";
        name.textContent = snapshot.name;
        name.title = `Saved ${snapshot.created_at}; click to restore`;
        name.addEventListener("click", () => this.restore(index));

        const rename = dom.createElement("button");
        rename.textContent = "rename";
        rename.addEventListener("click", () => {
            const box = dom.createElement("input");
            box.value = snapshot.name;
            const commit = () => {
                if (box.value.trim() !== "") {
                    this.rename(index, box.value.trim());
                } else {
                    this.render();
                }
            };
            box.addEventListener("keydown", (ev) => {
                if ((ev as KeyboardEvent).key === "Enter") {
                    commit();
                }
            });
            box.addEventListener("blur", commit);
            item.replaceChild(box, name);
            box.focus();
        });

        const exportButton = dom.createElement("button");
        exportButton.textContent = "export";
        exportButton.addEventListener("click", () => this.download(index));

        const del = dom.createElement("button");
        del.textContent = "delete";
        del.addEventListener("click", () => this.remove(index));

        item.append(star, name, rename, exportButton, del);
        return item;
    }

    private download(index: number): void {
        const { filename, text } = this.exportPayload(index);
        if (typeof URL.createObjectURL !== "function") {
            return;
        }
        const url = URL.createObjectURL(new Blob([text], { type: "application/json" }));
        const link = this.dom.createElement("a");
        link.href = url;
        link.download = filename;
        link.click();
        URL.revokeObjectURL(url);
    }
}
