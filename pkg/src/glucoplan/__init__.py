"""Meal-aware insulin planning: nutrient estimation from meal text, an
8-dose bolus plan toward a target glucose trace, and a forecast-backed
safety loop that re-titrates risky plans before release.

Research artifact. Not medical advice; never dose insulin from its output.
"""

__version__ = "0.1.0"
