"""Review service: durable decision log plus the local HTTP API."""

from .service import create_app, default_retrain
from .store import DECISIONS, DecisionRecord, ProjectStore, ReviewState, list_projects

__all__ = [
    "DECISIONS",
    "DecisionRecord",
    "ProjectStore",
    "ReviewState",
    "create_app",
    "default_retrain",
    "list_projects",
]
