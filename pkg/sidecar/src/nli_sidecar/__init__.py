"""Entailment scoring sidecar with a deterministic stub mode."""

from .app import ScoreRequest, ScoreResponse, create_app, stub_app
from .scorers import StubScorer, overlap_score, token_set

__version__ = "0.1.0"

__all__ = [
    "ScoreRequest",
    "ScoreResponse",
    "StubScorer",
    "create_app",
    "overlap_score",
    "stub_app",
    "token_set",
]
