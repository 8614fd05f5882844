"""Extracting the four nutrient numbers from model responses.

The contract asks for a flat key/value block, but real models improvise,
so the parser accepts key aliases, JSON-ish braces, and surrounding chatter
while still rejecting anything without four clean non-negative numbers.
"""
from __future__ import annotations

import math
import re

from ..errors import MalformedResponse
from .types import NutrientEstimate

_ALIASES = {
    "carbohydrate_g": ("carbohydrate_g", "carbohydrates", "carbohydrate", "carbs", "carb"),
    "protein_g": ("protein_g", "proteins", "protein"),
    "fat_g": ("fat_g", "fats", "fat"),
    "calories_cal": ("calories_cal", "calories", "calorie", "kcal", "cal", "energy"),
}

_NUMBER = r"[-+]?\d*\.?\d+(?:[eE][-+]?\d+)?"


def parse_response(response: str) -> NutrientEstimate:
    """Pull the four nutrient fields out of a response text.

    Raises MalformedResponse when a field is missing, non-numeric, negative,
    or non-finite.
    """
    if not response or not response.strip():
        raise MalformedResponse("empty response")
    values: dict[str, float] = {}
    for canonical, aliases in _ALIASES.items():
        found = None
        for alias in aliases:
            # "carb: 56", "carb = 56", '"carb_g": 56'
            pattern = rf"\b{alias}\b[\"']?\s*[:=]\s*({_NUMBER})"
            match = re.search(pattern, response, re.IGNORECASE)
            if match:
                found = float(match.group(1))
                break
            bad = re.search(rf"\b{alias}\b[\"']?\s*[:=]", response, re.IGNORECASE)
            if bad:
                raise MalformedResponse(f"non-numeric value for {alias!r}")
        if found is None:
            raise MalformedResponse(f"missing field {canonical!r}")
        if not math.isfinite(found) or found < 0:
            raise MalformedResponse(f"{canonical} = {found} is out of range")
        values[canonical] = found
    return NutrientEstimate(**values, raw_response=response)


def render_estimate(estimate: NutrientEstimate) -> str:
    """The canonical structured block; parse_response inverts it exactly."""
    return (
        f"carbohydrate_g: {estimate.carbohydrate_g}\n"
        f"protein_g: {estimate.protein_g}\n"
        f"fat_g: {estimate.fat_g}\n"
        f"calories_cal: {estimate.calories_cal}"
    )
