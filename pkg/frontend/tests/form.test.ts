import { describe, expect, it, vi } from "vitest";

import { buildSessionForm, validateForm } from "../src/form";
import type { SessionRecord } from "../src/types";
import safeFixture from "./fixtures/safe_session.json";

function fill(form: HTMLFormElement, values: Record<string, string>) {
    for (const [name, value] of Object.entries(values)) {
        const input = form.querySelector(`[name="${name}"]`) as HTMLInputElement;
        input.value = value;
    }
}

describe("validateForm", () => {
    const base = { patient_id: "alice", meal_text: "rice", target_glucose_mg_dl: 120 };

    it("accepts a sane form", () => {
        expect(validateForm(base)).toBeNull();
    });

    it("rejects an empty meal", () => {
        expect(validateForm({ ...base, meal_text: "   " })).toMatch(/meal/);
    });

    it("rejects out-of-bounds targets", () => {
        expect(validateForm({ ...base, target_glucose_mg_dl: 500 })).toMatch(/40 and 400/);
        expect(validateForm({ ...base, target_glucose_mg_dl: 20 })).toMatch(/40 and 400/);
    });
});

describe("form submission", () => {
    it("does not hit the network when the meal is empty", async () => {
        const submit = vi.fn();
        const handles = buildSessionForm(() => undefined, submit);
        fill(handles.element, { patient_id: "alice", meal_text: "  ", target_glucose_mg_dl: "120" });
        handles.element.dispatchEvent(new Event("submit"));
        await Promise.resolve();
        expect(submit).not.toHaveBeenCalled();
        const error = handles.element.querySelector(".form-error") as HTMLElement;
        expect(error.hidden).toBe(false);
        expect(error.textContent).toMatch(/meal/);
    });

    it("submits a valid form and hands the record to the renderer", async () => {
        const record = safeFixture as SessionRecord;
        const submit = vi.fn().mockResolvedValue(record);
        const seen: SessionRecord[] = [];
        const handles = buildSessionForm((r) => seen.push(r), submit);
        fill(handles.element, {
            patient_id: "alice",
            meal_text: "rice 100 g",
            target_glucose_mg_dl: "120",
        });
        handles.element.dispatchEvent(new Event("submit"));
        await vi.waitFor(() => expect(seen).toHaveLength(1));
        expect(submit).toHaveBeenCalledWith({
            patient_id: "alice",
            meal_text: "rice 100 g",
            target_glucose_mg_dl: 120,
        });
    });

    it("surfaces service errors verbatim and offers retry", async () => {
        const submit = vi
            .fn()
            .mockRejectedValueOnce(new Error("no glycemic history: PUT /patients/alice/history"))
            .mockResolvedValueOnce(safeFixture as SessionRecord);
        const seen: SessionRecord[] = [];
        const handles = buildSessionForm((r) => seen.push(r), submit);
        fill(handles.element, {
            patient_id: "alice",
            meal_text: "rice 100 g",
            target_glucose_mg_dl: "120",
        });
        handles.element.dispatchEvent(new Event("submit"));
        const error = handles.element.querySelector(".form-error") as HTMLElement;
        const retry = handles.element.querySelector(".retry-btn") as HTMLButtonElement;
        await vi.waitFor(() => expect(error.hidden).toBe(false));
        expect(error.textContent).toContain("no glycemic history");
        expect(retry.hidden).toBe(false);

        retry.click();
        await vi.waitFor(() => expect(seen).toHaveLength(1));
        expect(submit).toHaveBeenCalledTimes(2);
    });
});
