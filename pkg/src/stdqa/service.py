"""HTTP serving layer: /ask, /feedback, /kb/import, /health, /kb/stats.

Models load once at startup and are immutable afterwards; only imports,
history and feedback mutate state, all through the store's single writer.
Errors come back as structured JSON ``{"code", "message"}`` bodies.
"""

from __future__ import annotations

import json
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import kb as kb_mod
from .kb import KbError, KbConflictError, KbNotFoundError, KbParseError, KbStore, KbValidationError
from .simnet import load_sim_checkpoint

DEFAULT_IMPORT_LIMIT = 50 * 1024 * 1024


@dataclass
class ServiceConfig:
    sim_model: str
    kb_path: str
    ner_model: str | None = None
    vocab: str | None = None
    host: str = "127.0.0.1"
    port: int = 8000
    prefilter_m: int = 0
    top_k_cap: int = 20
    min_score: float = 0.0
    static_dir: str | None = None
    docs_dir: str | None = None
    import_size_limit: int = DEFAULT_IMPORT_LIMIT

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        """JSON object with the field names above."""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**data)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(config: ServiceConfig) -> FastAPI:
    """Build the app; models and store load during startup (fail fast)."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        model = load_sim_checkpoint(config.sim_model)
        if model.tokenizer is None:
            if config.vocab is None:
                raise RuntimeError("checkpoint has no tokenizer and no vocab path given")
            from .textcore import Tokenizer, Vocabulary

            model.tokenizer = Tokenizer(vocab=Vocabulary.load(config.vocab))
        if config.ner_model is not None:
            from .nertagger import load_ner_checkpoint

            app.state.ner_model = load_ner_checkpoint(config.ner_model)
        kb_path = Path(config.kb_path)
        store = KbStore(kb_path) if kb_path.is_dir() or not kb_path.exists() else KbStore.from_file(kb_path)
        app.state.model = model
        app.state.store = store
        app.state.status = "ready"
        yield
        app.state.status = "stopped"

    # /docs is reserved for the standard documents the jump links target
    app = FastAPI(title="stdqa", lifespan=lifespan, docs_url=None, redoc_url=None)
    app.state.status = "starting"
    app.state.config = config

    @app.exception_handler(KbError)
    async def kb_error_handler(request: Request, exc: KbError):
        if isinstance(exc, KbNotFoundError):
            return _error(404, "not_found", str(exc))
        if isinstance(exc, KbConflictError):
            return _error(409, "duplicate_id", str(exc))
        if isinstance(exc, KbParseError):
            return _error(400, "parse_error", str(exc))
        if isinstance(exc, KbValidationError):
            return _error(400, "validation_error", str(exc))
        return _error(500, "kb_error", str(exc))

    @app.get("/health")
    async def health():
        return {"status": app.state.status}

    @app.get("/kb/stats")
    async def stats():
        if app.state.status != "ready":
            return _error(503, "not_ready", "service is starting")
        return app.state.store.stats()

    @app.post("/ask")
    async def ask(payload: dict):
        if app.state.status != "ready":
            return _error(503, "not_ready", "service is starting")
        question = payload.get("question", "")
        if not isinstance(question, str) or not question.strip():
            return _error(400, "empty_question", "question must be a nonempty string")
        top_k = payload.get("top_k", 5)
        if not isinstance(top_k, int) or top_k < 0:
            return _error(400, "invalid_top_k", "top_k must be a nonnegative integer")
        clamped = False
        if top_k > config.top_k_cap:
            top_k = config.top_k_cap
            clamped = True
        results = kb_mod.retrieve(
            question, app.state.store, app.state.model,
            top_k=top_k, prefilter_m=config.prefilter_m, min_score=config.min_score,
        )
        entry = app.state.store.log_query(question, results[0] if results else None)
        body = {
            "candidates": [
                {
                    "question": qr.record.question,
                    "answer": qr.record.answer,
                    "score": qr.score,
                    "source": qr.record.source,
                }
                for qr in results
            ],
            "history_id": entry.id,
        }
        if clamped:
            body["top_k_clamped"] = True
        return body

    @app.post("/feedback")
    async def feedback(payload: dict):
        if app.state.status != "ready":
            return _error(503, "not_ready", "service is starting")
        history_id = payload.get("history_id")
        verdict = payload.get("verdict")
        if not isinstance(history_id, str) or not history_id:
            return _error(400, "invalid_history_id", "history_id is required")
        if verdict not in kb_mod.VERDICTS:
            return _error(400, "invalid_verdict", f"verdict must be one of {kb_mod.VERDICTS}")
        entry = app.state.store.record_feedback(history_id, verdict, payload.get("comment", ""))
        return {"ok": True, "feedback_id": entry.id}

    @app.post("/kb/import")
    async def kb_import(file: UploadFile):
        if app.state.status != "ready":
            return _error(503, "not_ready", "service is starting")
        blob = await file.read()
        if len(blob) > config.import_size_limit:
            return _error(413, "too_large", f"import exceeds {config.import_size_limit} bytes")
        added = app.state.store.import_text(blob.decode("utf-8"))
        return {"added": added}

    if config.docs_dir and Path(config.docs_dir).is_dir():
        app.mount("/docs", StaticFiles(directory=config.docs_dir), name="docs")
    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
