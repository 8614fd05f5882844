import { describe, expect, it } from "vitest";

import { classifySlot, classifyTrace } from "../src/risk";
import parity from "./fixtures/risk_parity.json";

describe("slot classification", () => {
    it("uses strict bounds: exactly 70 and exactly 180 are safe", () => {
        expect(classifySlot(69.99)).toBe("hypo");
        expect(classifySlot(70.0)).toBe("ok");
        expect(classifySlot(180.0)).toBe("ok");
        expect(classifySlot(180.01)).toBe("hyper");
    });

    it("matches the service's detect_risk on 100 random traces", () => {
        expect(parity).toHaveLength(100);
        for (const fixture of parity) {
            const kinds = classifyTrace(fixture.trace_mg_dl);
            expect(kinds).toEqual(fixture.kinds);
            expect(kinds.every((k) => k === "ok")).toBe(fixture.is_safe);
        }
    });
});
