from .types import SOURCE_LLM, SOURCE_OFFLINE, MealDescription, NutrientEstimate
from .prompt import PromptTemplate, build_prompt, default_template, load_template
from .parse import parse_response, render_estimate
from .table import NutrientTable, offline_estimate
from .backends import (
    HttpBackend,
    LlmBackend,
    OfflineBackend,
    ScriptedBackend,
    backend_from_config,
)
from .estimator import estimate_nutrients, stability_eval

__all__ = [
    "SOURCE_LLM",
    "SOURCE_OFFLINE",
    "MealDescription",
    "NutrientEstimate",
    "PromptTemplate",
    "build_prompt",
    "default_template",
    "load_template",
    "parse_response",
    "render_estimate",
    "NutrientTable",
    "offline_estimate",
    "LlmBackend",
    "OfflineBackend",
    "ScriptedBackend",
    "HttpBackend",
    "backend_from_config",
    "estimate_nutrients",
    "stability_eval",
]
