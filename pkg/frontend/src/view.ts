// Session rendering: guarded plan, nutrients, forecast, risk badges, and
// the re-titration timeline. Every clinical number is shown with its unit,
// straight off the wire. A flagged plan opens an acknowledgment gate that
// must be ticked before it can be dismissed.

import { renderTrace } from "./chart";
import { classifySlot } from "./risk";
import type { GuardIteration, SessionRecord } from "./types";

function div(className: string, text?: string): HTMLDivElement {
    const node = document.createElement("div");
    node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

function renderNutrients(record: SessionRecord): HTMLElement {
    const { nutrients } = record;
    const box = div("nutrients");
    box.append(div("section-title", "Estimated nutrients"));
    const rows: Array<[string, string]> = [
        ["carbohydrate", `${nutrients.carbohydrate_g.toFixed(1)} g`],
        ["protein", `${nutrients.protein_g.toFixed(1)} g`],
        ["fat", `${nutrients.fat_g.toFixed(1)} g`],
        ["energy", `${nutrients.calories_cal.toFixed(0)} cal`],
    ];
    const list = document.createElement("dl");
    for (const [name, value] of rows) {
        const dt = document.createElement("dt");
        dt.textContent = name;
        const dd = document.createElement("dd");
        dd.textContent = value;
        list.append(dt, dd);
    }
    box.append(list, div("nutrient-source", `source: ${nutrients.source}`));
    if (nutrients.note) box.append(div("nutrient-note", nutrients.note));
    return box;
}

function renderPlanTable(record: SessionRecord): HTMLElement {
    const wrap = div("plan");
    wrap.append(div("section-title", "Bolus plan (next 2 hours)"));
    const table = document.createElement("table");
    table.className = "dose-table";
    const head = table.createTHead().insertRow();
    for (const caption of ["slot", "time", "dose"]) {
        const cell = document.createElement("th");
        cell.textContent = caption;
        head.append(cell);
    }
    const body = table.createTBody();
    record.plan.doses_iu.forEach((dose, slot) => {
        const row = body.insertRow();
        row.className = "dose-row";
        row.insertCell().textContent = `${slot + 1}`;
        row.insertCell().textContent = `+${(slot + 1) * 15} min`;
        const cell = row.insertCell();
        cell.className = "dose-value";
        cell.textContent = `${dose.toFixed(2)} IU`;
    });
    wrap.append(table);
    return wrap;
}

function renderRiskBadges(record: SessionRecord): HTMLElement {
    const wrap = div("risk-badges");
    wrap.append(div("section-title", "Per-slot risk"));
    const strip = div("badge-strip");
    record.forecast.glucose_mg_dl.forEach((value, slot) => {
        const kind = classifySlot(value);
        const badge = document.createElement("span");
        badge.className = `badge badge-${kind}`;
        badge.setAttribute("data-slot", String(slot));
        badge.textContent = kind === "ok" ? `${value.toFixed(0)}` : `${value.toFixed(0)}! ${kind}`;
        badge.title = `slot ${slot + 1}: ${value.toFixed(1)} mg/dl`;
        strip.append(badge);
    });
    wrap.append(strip);
    return wrap;
}

function renderTimeline(audit: GuardIteration[]): HTMLElement {
    const wrap = div("timeline");
    wrap.append(div("section-title", "Re-titration history"));
    for (const item of audit) {
        const entry = div("timeline-item");
        const headline =
            item.iteration === 0 ? "initial plan" : `re-titration ${item.iteration}`;
        entry.append(div("timeline-head", `${headline} — ${item.events.length} risk event(s)`));
        entry.append(
            div("timeline-doses", `doses: ${item.doses_iu.map((d) => d.toFixed(2)).join(", ")} IU`),
        );
        if (item.note) entry.append(div("timeline-note", item.note));
        wrap.append(entry);
    }
    return wrap;
}

function renderFlagGate(banner: HTMLElement): HTMLElement {
    const gate = div("flag-gate");
    gate.append(
        div(
            "flag-text",
            "This plan could not be made risk-free within the re-titration budget. " +
                "It is the least-risky candidate and requires explicit acknowledgment.",
        ),
    );
    const label = document.createElement("label");
    const checkbox = document.createElement("input");
    checkbox.type = "checkbox";
    checkbox.className = "ack-check";
    label.append(checkbox, document.createTextNode(" I understand this plan is flagged"));
    const dismiss = document.createElement("button");
    dismiss.className = "ack-dismiss";
    dismiss.textContent = "Acknowledge and show plan";
    dismiss.disabled = true;
    checkbox.addEventListener("change", () => {
        dismiss.disabled = !checkbox.checked;
    });
    dismiss.addEventListener("click", () => {
        if (!checkbox.checked) return; // gate holds without the tick
        gate.remove();
        banner.classList.add("acknowledged");
    });
    gate.append(label, dismiss);
    return gate;
}

export function renderSessionView(record: SessionRecord): HTMLElement {
    const status = record.plan.safety_status;
    const root = div(`session-view status-${status}`);

    const banner = div(
        `status-banner banner-${status}`,
        status === "safe"
            ? `Plan approved by the guard loop (re-titrations: ${record.plan.retitration_count})`
            : `FLAGGED: risks remain after ${record.plan.retitration_count} re-titration(s)`,
    );
    root.append(banner);

    if (status === "flagged") {
        root.append(renderFlagGate(banner));
    }

    root.append(div("meal-echo", `meal: ${record.meal_text}`));
    root.append(renderNutrients(record));
    root.append(renderPlanTable(record));

    const chartBox = div("chart-box");
    chartBox.append(div("section-title", "Predicted glucose (mg/dl)"));
    chartBox.append(renderTrace(record.forecast.glucose_mg_dl));
    root.append(chartBox);

    root.append(renderRiskBadges(record));
    root.append(renderTimeline(record.audit));
    root.append(div("disclaimer", record.disclaimer));
    return root;
}
