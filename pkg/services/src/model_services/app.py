"""FastAPI service exposing /embed, /toxicity, and /health.

Stateless request handling over a backend loaded at startup. Responses
preserve request order; batches above the configured maximum are rejected
with 413 and empty texts with 422.
"""

from __future__ import annotations

import os
from contextlib import asynccontextmanager
from typing import Literal

from fastapi import FastAPI, HTTPException, Request
from pydantic import BaseModel, Field, field_validator

from .backends import backend_from_env

DEFAULT_MAX_BATCH = 256


class EmbedRequest(BaseModel):
    texts: list[str] = Field(min_length=1)
    mode: Literal["token", "sentence"] = "token"

    @field_validator("texts")
    @classmethod
    def texts_non_empty(cls, texts):
        for t in texts:
            if not t or not t.strip():
                raise ValueError("texts must be non-empty")
        return texts


class ToxicityRequest(BaseModel):
    texts: list[str] = Field(min_length=1)

    @field_validator("texts")
    @classmethod
    def texts_non_empty(cls, texts):
        for t in texts:
            if not t or not t.strip():
                raise ValueError("texts must be non-empty")
        return texts


def create_app(backend=None, max_batch: int | None = None) -> FastAPI:
    limit = max_batch or int(os.environ.get("MODELSVC_MAX_BATCH", DEFAULT_MAX_BATCH))

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.backend = backend if backend is not None else backend_from_env()
        app.state.ready = True
        yield

    app = FastAPI(title="model-services", lifespan=lifespan)
    app.state.ready = False
    app.state.backend = None

    def _backend(request: Request):
        state = request.app.state
        if not state.ready or state.backend is None:
            raise HTTPException(status_code=503, detail="models not loaded")
        return state.backend

    def _check_batch(n: int):
        if n > limit:
            raise HTTPException(status_code=413, detail=f"batch exceeds {limit}")

    @app.post("/embed")
    def embed(payload: EmbedRequest, request: Request):
        backend = _backend(request)
        _check_batch(len(payload.texts))
        if payload.mode == "token":
            dim, matrices, counts = backend.token_embeddings(payload.texts)
            return {
                "dim": dim,
                "embeddings": [m.tolist() for m in matrices],
                "token_counts": counts,
            }
        dim, vectors, counts = backend.sentence_embeddings(payload.texts)
        return {
            "dim": dim,
            "embeddings": [v.tolist() for v in vectors],
            "token_counts": counts,
        }

    @app.post("/toxicity")
    def toxicity(payload: ToxicityRequest, request: Request):
        backend = _backend(request)
        _check_batch(len(payload.texts))
        return {"scores": backend.toxicity(payload.texts)}

    @app.get("/health")
    def health(request: Request):
        state = request.app.state
        if not state.ready or state.backend is None:
            raise HTTPException(status_code=503, detail="warming up")
        return {"status": "ok", "models": state.backend.models}

    return app


app = create_app()
