from .store import Conflict, FileStore, NotFound
from .runtime import ModelRuntime, PlanningContext, history_from_wire
from .app import DISCLAIMER, App, serve

__all__ = [
    "App",
    "Conflict",
    "DISCLAIMER",
    "FileStore",
    "ModelRuntime",
    "NotFound",
    "PlanningContext",
    "history_from_wire",
    "serve",
]
