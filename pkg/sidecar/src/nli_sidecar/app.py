"""HTTP surface: POST /score and GET /health.

The request/response shapes match the engine's remote-provider protocol:
``{"premise": str, "hypotheses": [str, ...]}`` in, ``{"scores": [...]}``
out, index-aligned. Malformed bodies answer 400; a still-loading model
answers 503.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from .scorers import UnscorableHypothesis, make_scorer


class ScoreRequest(BaseModel):
    premise: str
    hypotheses: list[str] = Field(min_length=1)

    @field_validator("premise")
    @classmethod
    def premise_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("premise must not be blank")
        return value

    @field_validator("hypotheses")
    @classmethod
    def hypotheses_not_blank(cls, value: list[str]) -> list[str]:
        for h in value:
            if not h.strip():
                raise ValueError("hypotheses must not be blank")
        return value


class ScoreResponse(BaseModel):
    scores: list[float]


def create_app(mode: str = "stub", model_name: str | None = None) -> FastAPI:
    scorer = make_scorer(mode, model_name)
    app = FastAPI(title="nli-sidecar")
    app.state.scorer = scorer

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        detail = [
            {"loc": list(e.get("loc", ())), "msg": e.get("msg"), "type": e.get("type")}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.get("/health")
    async def health():
        if not scorer.ready():
            return JSONResponse(
                status_code=503, content={"status": "loading", "mode": scorer.mode}
            )
        return {"status": "ok", "mode": scorer.mode}

    @app.post("/score", response_model=ScoreResponse)
    async def score(request: ScoreRequest):
        if not scorer.ready():
            return JSONResponse(status_code=503, content={"detail": "model loading"})
        try:
            values = scorer.score(request.premise, request.hypotheses)
        except UnscorableHypothesis as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        return {"scores": values}

    return app


def stub_app() -> FastAPI:
    """Ready-to-serve app in deterministic stub mode."""
    return create_app("stub")


__all__ = ["ScoreRequest", "ScoreResponse", "create_app", "stub_app"]
