"""Nutrient estimation with retry and offline fallback."""
from __future__ import annotations

import logging

import numpy as np

from ..errors import BackendUnavailable, MalformedResponse, NoMatch
from .backends import LlmBackend
from .parse import parse_response
from .prompt import PromptTemplate, build_prompt
from .table import NutrientTable, offline_estimate
from .types import SOURCE_LLM, SOURCE_OFFLINE, MealDescription, NutrientEstimate

logger = logging.getLogger(__name__)

DEFAULT_RETRIES = 2


def estimate_nutrients(
    meal: MealDescription,
    backend: LlmBackend,
    retries: int = DEFAULT_RETRIES,
    template: PromptTemplate | None = None,
    table: NutrientTable | None = None,
) -> NutrientEstimate:
    """First parseable backend response wins; the offline table is plan B.

    The backend is called at most ``retries + 1`` times. When every attempt
    fails or misparses, the bundled table answers instead (source marked
    offline_table). BackendUnavailable is raised only when the table cannot
    match the meal either.
    """
    prompt = build_prompt(meal, template)
    for attempt in range(retries + 1):
        try:
            response = backend.complete(prompt)
        except BackendUnavailable as exc:
            logger.warning("backend %s attempt %d failed: %s", backend.name, attempt + 1, exc)
            continue
        try:
            estimate = parse_response(response)
        except MalformedResponse as exc:
            logger.warning("backend %s attempt %d misparsed: %s", backend.name, attempt + 1, exc)
            continue
        estimate.source = SOURCE_LLM
        return estimate

    try:
        fallback = offline_estimate(meal, table)
    except NoMatch as exc:
        raise BackendUnavailable(
            f"backend {backend.name} failed after {retries + 1} attempts and "
            f"the offline table has no match: {exc}"
        ) from exc
    fallback.source = SOURCE_OFFLINE
    return fallback


def stability_eval(
    meal: MealDescription,
    backend: LlmBackend,
    runs: int,
    retries: int = DEFAULT_RETRIES,
    template: PromptTemplate | None = None,
) -> dict[str, float]:
    """Population variance of each nutrient across repeated queries.

    A deterministic backend scores zero everywhere; spread across runs
    quantifies how unstable the tailored model is on this meal.
    """
    if runs < 2:
        raise ValueError(f"stability evaluation needs at least 2 runs, got {runs}")
    samples = [
        estimate_nutrients(meal, backend, retries=retries, template=template).as_tuple()
        for _ in range(runs)
    ]
    arr = np.asarray(samples)
    names = ("carbohydrate_g", "protein_g", "fat_g", "calories_cal")
    return {name: float(arr[:, i].var()) for i, name in enumerate(names)}
