import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { controlFrame, parseFrame, setFrame, snapshotRequestFrame } from "../src/protocol";

// The engine's checked-in wire fixtures; client builders must match them
// byte for byte or the server rejects (or silently reinterprets) the frame.
const GOLDEN = join(dirname(fileURLToPath(import.meta.url)), "..", "..", "tests", "golden");

function golden(name: string): string {
    return readFileSync(join(GOLDEN, name), "utf-8");
}

describe("client frame builders", () => {
    it("control matches the golden frame", () => {
        expect(controlFrame("pause")).toBe(golden("control.json"));
    });

    it("control with params matches the golden frame", () => {
        expect(controlFrame("step_forward", { count: 1 }))
            .toBe(golden("control_params.json"));
    });

    it("set matches the golden frame", () => {
        expect(setFrame("frequency", 125)).toBe(golden("set.json"));
    });

    it("snapshot_request matches the golden frame", () => {
        expect(snapshotRequestFrame()).toBe(golden("snapshot_request.json"));
    });
});

describe("parseFrame", () => {
    it("accepts every engine-originated golden fixture", () => {
        const fixtures: [string, string][] = [
            ["hello.json", "hello"],
            ["changeset.json", "changeset"],
            ["changeset_backward.json", "changeset"],
            ["catchup.json", "changeset"],
            ["status.json", "status"],
            ["status_warning.json", "status"],
            ["snapshot.json", "snapshot"],
            ["error.json", "error"],
        ];
        for (const [file, type] of fixtures) {
            expect(parseFrame(golden(file)).type).toBe(type);
        }
    });

    it("round-trips an engine frame without field loss", () => {
        const text = golden("changeset.json");
        expect(JSON.stringify(parseFrame(text))).toBe(JSON.stringify(JSON.parse(text)));
    });

    it("rejects non-objects", () => {
        expect(() => parseFrame("[1,2]")).toThrow("not an object");
        expect(() => parseFrame("42")).toThrow("not an object");
    });

    it("rejects unknown frame types", () => {
        expect(() => parseFrame('{"type":"chunk","batch":0,"rows":[]}'))
            .toThrow("unexpected frame type");
        expect(() => parseFrame('{"nope":1}')).toThrow("unexpected frame type");
    });
});
