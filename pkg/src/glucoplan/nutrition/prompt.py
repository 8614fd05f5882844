"""Six-section prompt template for the nutrition estimator."""
from __future__ import annotations

import re
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from ..errors import InvalidTemplate
from .types import MealDescription

SECTION_ORDER = (
    "role_play",
    "task_description",
    "output_structure_requirement",
    "reasoning_guidance",
    "structure_regularization",
    "one_shot_example",
)

_MEAL_MARKER = "Meal to analyze:"


@dataclass
class PromptTemplate:
    role_play: str
    task_description: str
    output_structure_requirement: str
    reasoning_guidance: str
    structure_regularization: str
    one_shot_example: str

    def validate(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name).strip():
                raise InvalidTemplate(f"template section {f.name!r} is empty")

    def render(self, meal: MealDescription) -> str:
        """All six sections in order, then the meal exactly once at the end."""
        self.validate()
        parts = [getattr(self, name).strip() for name in SECTION_ORDER]
        meal_line = f"{_MEAL_MARKER} {meal.text}"
        if meal.portion_hint:
            meal_line += f" (portion hint: {meal.portion_hint})"
        parts.append(meal_line)
        return "\n\n".join(parts)


def build_prompt(meal: MealDescription, template: "PromptTemplate | None" = None) -> str:
    template = template or default_template()
    return template.render(meal)


def extract_meal_text(prompt: str) -> str:
    """Inverse of render's final line; lets offline backends find the meal."""
    idx = prompt.rfind(_MEAL_MARKER)
    if idx < 0:
        raise InvalidTemplate("prompt carries no meal marker")
    return prompt[idx + len(_MEAL_MARKER):].split("(portion hint:")[0].strip()


_HEADER = re.compile(r"^\[([a-z_]+)\]\s*$", re.M)


def parse_template_text(text: str) -> PromptTemplate:
    """Parse the ``[section]``-headed plain-text template format."""
    sections: dict[str, str] = {}
    matches = list(_HEADER.finditer(text))
    for match, nxt in zip(matches, matches[1:] + [None]):
        end = nxt.start() if nxt else len(text)
        sections[match.group(1)] = text[match.end():end].strip()
    missing = [name for name in SECTION_ORDER if name not in sections]
    if missing:
        raise InvalidTemplate(f"template file missing sections: {missing}")
    template = PromptTemplate(**{name: sections[name] for name in SECTION_ORDER})
    template.validate()
    return template


def load_template(path: str | Path) -> PromptTemplate:
    return parse_template_text(Path(path).read_text(encoding="utf-8"))


def default_template() -> PromptTemplate:
    text = resources.files("glucoplan.nutrition").joinpath("data/default_prompt.txt").read_text(
        encoding="utf-8"
    )
    return parse_template_text(text)
