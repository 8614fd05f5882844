"""Meal descriptions and nutrient estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

from ..errors import EmptyMeal

SOURCE_LLM = "llm"
SOURCE_OFFLINE = "offline_table"


@dataclass
class MealDescription:
    text: str
    eaten_at: Optional[datetime] = None
    portion_hint: Optional[str] = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise EmptyMeal("meal description is empty")
        self.text = self.text.strip()


@dataclass
class NutrientEstimate:
    carbohydrate_g: float
    protein_g: float
    fat_g: float
    calories_cal: float
    source: str = SOURCE_LLM
    raw_response: str = ""

    def __post_init__(self):
        for name in ("carbohydrate_g", "protein_g", "fat_g", "calories_cal"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
            setattr(self, name, value)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.carbohydrate_g, self.protein_g, self.fat_g, self.calories_cal)

    def to_dict(self) -> dict:
        return {
            "carbohydrate_g": self.carbohydrate_g,
            "protein_g": self.protein_g,
            "fat_g": self.fat_g,
            "calories_cal": self.calories_cal,
            "source": self.source,
        }
