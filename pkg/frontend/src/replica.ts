import type { ChangesetFrame, WireRow } from "./protocol";

// Local mirror of the server's dataset. The UI never invents rows: every
// mutation comes from an applied changeset, so counts and values always
// match what the engine reported last.
export class Replica {
    readonly rows = new Map<number, Record<string, unknown>>();
    step = -1;

    apply(frame: ChangesetFrame): void {
        for (const row of frame.insert) {
            this.rows.set(row.id, { ...row.values });
        }
        for (const row of frame.update) {
            const current = this.rows.get(row.id) ?? {};
            this.rows.set(row.id, { ...current, ...row.values });
        }
        for (const id of frame.remove) {
            this.rows.delete(id);
        }
        this.step = frame.direction === "backward" ? frame.step - 1 : frame.step;
    }

    get rowCount(): number {
        return this.rows.size;
    }

    // Flat records for a chart's named dataset; the engine id rides along
    // under a reserved key so keyed updates stay stable.
    toRecords(): Record<string, unknown>[] {
        const records: Record<string, unknown>[] = [];
        for (const [id, values] of this.rows) {
            records.push({ __id: id, ...values });
        }
        return records;
    }

    clear(): void {
        this.rows.clear();
        this.step = -1;
    }
}

export function rowRecord(row: WireRow): Record<string, unknown> {
    return { __id: row.id, ...row.values };
}
