import { buildSessionForm } from "./form";
import { renderSessionView } from "./view";
import "./style.css";

function mount(): void {
    const root = document.getElementById("app");
    if (!root) throw new Error("missing #app container");

    const title = document.createElement("h1");
    title.textContent = "glucoplan";
    const subtitle = document.createElement("p");
    subtitle.className = "subtitle";
    subtitle.textContent =
        "Meal-aware bolus planning with a forecast-backed safety guard. Research tool only.";

    const result = document.createElement("div");
    result.id = "session-result";

    const form = buildSessionForm((record) => {
        result.replaceChildren(renderSessionView(record));
    });

    root.append(title, subtitle, form.element, result);
}

mount();
