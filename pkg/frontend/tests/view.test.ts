import { describe, expect, it } from "vitest";

import { renderSessionView } from "../src/view";
import type { SessionRecord } from "../src/types";
import safeFixture from "./fixtures/safe_session.json";
import flaggedFixture from "./fixtures/flagged_session.json";

const safeSession = safeFixture as SessionRecord;
const flaggedSession = flaggedFixture as SessionRecord;

describe("safe session view", () => {
    const view = renderSessionView(safeSession);

    it("renders 8 dose rows, every dose labeled in IU", () => {
        const rows = view.querySelectorAll(".dose-row");
        expect(rows).toHaveLength(8);
        for (const row of rows) {
            expect(row.querySelector(".dose-value")?.textContent).toMatch(/ IU$/);
        }
    });

    it("renders the trace chart with no risk marks", () => {
        expect(view.querySelector(".trace-chart")).toBeTruthy();
        expect(view.querySelectorAll(".risk-mark")).toHaveLength(0);
        expect(view.querySelectorAll(".trace-point")).toHaveLength(8);
    });

    it("shows the safety status and no acknowledgment gate", () => {
        expect(view.querySelector(".banner-safe")).toBeTruthy();
        expect(view.querySelector(".flag-gate")).toBeNull();
    });

    it("echoes glucose values with units in badges", () => {
        const badges = view.querySelectorAll(".badge");
        expect(badges).toHaveLength(8);
        expect(view.textContent).toContain("mg/dl");
    });

    it("shows the disclaimer", () => {
        expect(view.textContent).toContain("not medical advice");
    });
});

describe("flagged session view", () => {
    it("marks risky forecast points", () => {
        const view = renderSessionView(flaggedSession);
        expect(view.querySelectorAll(".risk-mark").length).toBeGreaterThan(0);
    });

    it("shows the re-titration timeline from the audit", () => {
        const view = renderSessionView(flaggedSession);
        const items = view.querySelectorAll(".timeline-item");
        expect(items).toHaveLength(flaggedSession.audit.length);
        expect(items[1].textContent).toContain("re-titration 1");
    });

    it("blocks dismissal until the acknowledgment box is ticked", () => {
        const view = renderSessionView(flaggedSession);
        const gate = view.querySelector(".flag-gate") as HTMLElement;
        const dismiss = gate.querySelector(".ack-dismiss") as HTMLButtonElement;
        const check = gate.querySelector(".ack-check") as HTMLInputElement;

        expect(gate).toBeTruthy();
        expect(dismiss.disabled).toBe(true);

        dismiss.click(); // not acknowledged: the gate must hold
        expect(view.querySelector(".flag-gate")).toBeTruthy();

        check.checked = true;
        check.dispatchEvent(new Event("change"));
        expect(dismiss.disabled).toBe(false);
        dismiss.click();
        expect(view.querySelector(".flag-gate")).toBeNull();
    });

    it("never renders a plan without a safety status", () => {
        const view = renderSessionView(flaggedSession);
        expect(view.className).toContain("status-flagged");
        expect(view.querySelector(".status-banner")?.textContent).toContain("FLAGGED");
    });
});
