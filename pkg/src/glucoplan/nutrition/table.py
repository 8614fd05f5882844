"""Offline nutrient lookup: the no-network fallback estimator."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import NoMatch
from .types import SOURCE_OFFLINE, MealDescription, NutrientEstimate

_WORD = re.compile(r"[a-z]+")
# "200 g", "200g", "200 grams"
_GRAMS = re.compile(r"(\d+(?:\.\d+)?)\s*(?:g|gram|grams)\b", re.IGNORECASE)

DEFAULT_SERVING_G = 100.0
_STOPWORDS = {
    "a", "an", "and", "bowl", "cooked", "cup", "for", "fresh", "fried", "g", "gram",
    "grams", "in", "large", "of", "one", "plate", "raw", "small", "some", "the",
    "to", "two", "with",
}


@dataclass
class NutrientRow:
    carb: float
    protein: float
    fat: float
    cal: float


class NutrientTable:
    """Per-100 g nutrient rows keyed by lowercase food name."""

    def __init__(self, rows: dict[str, NutrientRow]):
        self.rows = rows
        # longest names first so "white rice" wins over "rice"
        self._ordered = sorted(rows, key=len, reverse=True)

    @classmethod
    def from_csv(cls, path: str | Path) -> "NutrientTable":
        rows = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                rows[rec["food"].strip().lower()] = NutrientRow(
                    carb=float(rec["carb_g_per_100g"]),
                    protein=float(rec["protein_g_per_100g"]),
                    fat=float(rec["fat_g_per_100g"]),
                    cal=float(rec["cal_per_100g"]),
                )
        return cls(rows)

    @classmethod
    def bundled(cls) -> "NutrientTable":
        with resources.as_file(
            resources.files("glucoplan.nutrition").joinpath("data/nutrient_table.csv")
        ) as path:
            return cls.from_csv(path)


def _portion_grams(text: str, start: int, end: int) -> float:
    """Grams stated near the food mention, else one default serving."""
    after = _GRAMS.search(text, end, min(len(text), end + 24))
    if after:
        return float(after.group(1))
    before = None
    for match in _GRAMS.finditer(text, max(0, start - 24), start):
        before = match
    if before:
        return float(before.group(1))
    return DEFAULT_SERVING_G


def offline_estimate(meal: MealDescription, table: "NutrientTable | None" = None) -> NutrientEstimate:
    """Token-match foods in the meal text and scale per-100 g rows.

    Every occurrence of a food contributes once (longest names claim their
    span first), so repeated items add up. Words that match nothing are
    listed in raw_response for transparency. No match at all raises NoMatch.
    """
    table = table or NutrientTable.bundled()
    text = meal.text.lower()
    claimed = [False] * len(text)
    totals = [0.0, 0.0, 0.0, 0.0]
    matched_any = False
    matched_spans: list[tuple[str, float]] = []

    for food in table._ordered:
        for match in re.finditer(rf"\b{re.escape(food)}\b", text):
            if any(claimed[match.start():match.end()]):
                continue
            for i in range(match.start(), match.end()):
                claimed[i] = True
            grams = _portion_grams(text, match.start(), match.end())
            row = table.rows[food]
            scale = grams / 100.0
            totals[0] += row.carb * scale
            totals[1] += row.protein * scale
            totals[2] += row.fat * scale
            totals[3] += row.cal * scale
            matched_any = True
            matched_spans.append((food, grams))

    if not matched_any:
        raise NoMatch(f"no table entry matches: {meal.text!r}")

    leftovers = [
        w for w in _WORD.findall("".join(c if not claimed[i] else " " for i, c in enumerate(text)))
        if w not in _STOPWORDS
    ]
    note = "; ".join(f"{food} {grams:g} g" for food, grams in matched_spans)
    if leftovers:
        note += f" | unmatched: {', '.join(sorted(set(leftovers)))}"
    return NutrientEstimate(
        carbohydrate_g=totals[0],
        protein_g=totals[1],
        fat_g=totals[2],
        calories_cal=totals[3],
        source=SOURCE_OFFLINE,
        raw_response=note,
    )
