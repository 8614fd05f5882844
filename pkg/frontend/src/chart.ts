// SVG forecast chart: shaded bands below 70 and above 180 mg/dl, one
// point per 15-minute slot, points inside a band get the risk marker.

import { classifySlot, HYPER_MG_DL, HYPO_MG_DL } from "./risk";

const W = 460;
const H = 220;
const PAD = { left: 44, right: 12, top: 10, bottom: 26 };

function el<K extends keyof SVGElementTagNameMap>(
    name: K,
    attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
    const node = document.createElementNS("http://www.w3.org/2000/svg", name);
    for (const [key, value] of Object.entries(attrs)) {
        node.setAttribute(key, String(value));
    }
    return node;
}

export function renderTrace(traceMgDl: number[]): SVGSVGElement {
    const lo = Math.min(40, ...traceMgDl) - 10;
    const hi = Math.max(220, ...traceMgDl) + 10;
    const x = (slot: number) =>
        PAD.left + (slot * (W - PAD.left - PAD.right)) / Math.max(1, traceMgDl.length - 1);
    const y = (value: number) =>
        PAD.top + ((hi - value) * (H - PAD.top - PAD.bottom)) / (hi - lo);

    const svg = el("svg", {
        viewBox: `0 0 ${W} ${H}`,
        class: "trace-chart",
        role: "img",
        "aria-label": "predicted glucose trace (mg/dl)",
    });

    const plotRight = W - PAD.right;
    svg.append(
        el("rect", {
            x: PAD.left, y: y(HYPO_MG_DL), width: plotRight - PAD.left,
            height: y(lo) - y(HYPO_MG_DL), class: "band band-hypo",
        }),
        el("rect", {
            x: PAD.left, y: y(hi), width: plotRight - PAD.left,
            height: y(HYPER_MG_DL) - y(hi), class: "band band-hyper",
        }),
    );

    for (const bound of [HYPO_MG_DL, HYPER_MG_DL]) {
        svg.append(
            el("line", {
                x1: PAD.left, x2: plotRight, y1: y(bound), y2: y(bound), class: "bound-line",
            }),
            el("text", { x: 4, y: y(bound) + 4, class: "axis-label" }),
        );
        (svg.lastChild as SVGTextElement).textContent = `${bound}`;
    }

    const points = traceMgDl.map((v, i) => `${x(i)},${y(v)}`).join(" ");
    svg.append(el("polyline", { points, class: "trace-line" }));

    traceMgDl.forEach((value, slot) => {
        const kind = classifySlot(value);
        const dot = el("circle", {
            cx: x(slot), cy: y(value), r: kind === "ok" ? 3.5 : 5.5,
            class: kind === "ok" ? "trace-point" : `trace-point risk-mark risk-${kind}`,
        });
        dot.setAttribute("data-slot", String(slot));
        dot.setAttribute("data-kind", kind);
        const tip = el("title", {});
        tip.textContent = `slot ${slot + 1}: ${value.toFixed(1)} mg/dl (${kind})`;
        dot.append(tip);
        svg.append(dot);

        const label = el("text", { x: x(slot), y: H - 8, class: "axis-label slot-label" });
        label.textContent = `+${(slot + 1) * 15}m`;
        svg.append(label);
    });

    return svg;
}
