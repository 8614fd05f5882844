// Session submission form with inline validation. Invalid input never
// reaches the network; service errors come back verbatim with a retry.

import { submitSession } from "./api";
import type { SessionForm, SessionRecord } from "./types";

export const TARGET_BOUNDS_MG_DL = { min: 40, max: 400 };

export interface FormHandles {
    element: HTMLFormElement;
    setBusy(busy: boolean): void;
}

export function validateForm(form: SessionForm): string | null {
    if (!form.patient_id.trim()) return "patient id is required";
    if (!form.meal_text.trim()) return "meal description is empty";
    const target = form.target_glucose_mg_dl;
    if (!Number.isFinite(target)) return "target glucose must be a number";
    if (target <= TARGET_BOUNDS_MG_DL.min || target >= TARGET_BOUNDS_MG_DL.max) {
        return `target glucose must be between ${TARGET_BOUNDS_MG_DL.min} and ${TARGET_BOUNDS_MG_DL.max} mg/dl`;
    }
    return null;
}

function field(labelText: string, input: HTMLInputElement | HTMLTextAreaElement): HTMLElement {
    const wrap = document.createElement("label");
    wrap.className = "field";
    const caption = document.createElement("span");
    caption.textContent = labelText;
    wrap.append(caption, input);
    return wrap;
}

export function buildSessionForm(
    onResult: (record: SessionRecord) => void,
    submit: (form: SessionForm) => Promise<SessionRecord> = submitSession,
): FormHandles {
    const form = document.createElement("form");
    form.className = "session-form";
    form.noValidate = true;

    const patient = document.createElement("input");
    patient.name = "patient_id";
    patient.placeholder = "alice";

    const meal = document.createElement("textarea");
    meal.name = "meal_text";
    meal.placeholder = "white rice 200 g with chicken breast";

    const target = document.createElement("input");
    target.name = "target_glucose_mg_dl";
    target.type = "number";
    target.value = "120";

    const error = document.createElement("div");
    error.className = "form-error";
    error.hidden = true;

    const retry = document.createElement("button");
    retry.type = "button";
    retry.className = "retry-btn";
    retry.textContent = "Retry";
    retry.hidden = true;

    const button = document.createElement("button");
    button.type = "submit";
    button.textContent = "Request plan";

    form.append(
        field("patient", patient),
        field("meal (free text)", meal),
        field("target glucose (mg/dl)", target),
        error,
        retry,
        button,
    );

    const setBusy = (busy: boolean) => {
        button.disabled = busy;
        form.classList.toggle("busy", busy);
    };

    const run = async () => {
        const payload: SessionForm = {
            patient_id: patient.value,
            meal_text: meal.value,
            target_glucose_mg_dl: Number(target.value),
        };
        const problem = validateForm(payload);
        if (problem) {
            error.textContent = problem;
            error.hidden = false;
            retry.hidden = true;
            return;
        }
        error.hidden = true;
        setBusy(true);
        try {
            const record = await submit(payload);
            retry.hidden = true;
            onResult(record);
        } catch (err) {
            error.textContent = err instanceof Error ? err.message : String(err);
            error.hidden = false;
            retry.hidden = false;
        } finally {
            setBusy(false);
        }
    };

    form.addEventListener("submit", (event) => {
        event.preventDefault();
        void run();
    });
    retry.addEventListener("click", () => void run());

    return { element: form, setBusy };
}
