"""FastAPI application exposing the train/predict/health wire protocol.

All endpoints speak UTF-8 JSON under /v1 and report failures as
{"error": {"code", "message"}}. Training is content-addressed: identical
requests return the same model_id without retraining; the store is
append-only.
"""

from __future__ import annotations

import os
import tempfile
import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from .engine import StubEngine, TorchEngine, require_both_classes
from .errors import BridgeError
from .hashing import model_id_for
from .schemas import PredictRequest, TrainRequest

STUB_ENV = "TRIALSCREEN_BRIDGE_STUB"
MODELS_ENV = "TRIALSCREEN_BRIDGE_MODELS"
DEFAULT_MODEL_ENV = "TRIALSCREEN_BRIDGE_DEFAULT_MODEL"


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


def create_app(
    stub: bool | None = None,
    model_root: str | None = None,
    default_model: str | None = None,
) -> FastAPI:
    if stub is None:
        stub = os.environ.get(STUB_ENV, "").lower() in ("1", "true", "yes")
    model_root = model_root or os.environ.get(MODELS_ENV) or tempfile.mkdtemp(
        prefix="bridge-models-"
    )
    default_model = default_model or os.environ.get(DEFAULT_MODEL_ENV)

    from .store import ModelStore

    app = FastAPI(title="trialscreen-bridge", docs_url=None, redoc_url=None)
    app.state.store = ModelStore(model_root)
    app.state.engine = StubEngine() if stub else TorchEngine(default_model)
    app.state.train_lock = threading.Lock()

    @app.exception_handler(BridgeError)
    async def handle_bridge_error(request: Request, exc: BridgeError):
        return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(part) for part in first.get("loc", ()))
        message = f"{where}: {first.get('msg', 'invalid request')}"
        return _error_response(400, "invalid_request", message)

    @app.exception_handler(StarletteHTTPException)
    async def handle_http_error(request: Request, exc: StarletteHTTPException):
        return _error_response(exc.status_code, f"http_{exc.status_code}", str(exc.detail))

    @app.exception_handler(Exception)
    async def handle_internal_error(request: Request, exc: Exception):
        return _error_response(500, "internal", f"{type(exc).__name__}: {exc}")

    @app.post("/v1/train")
    def train(request: TrainRequest) -> dict:
        require_both_classes(request)
        model_id = model_id_for(request)
        store = app.state.store
        # Lock covers check-and-train so concurrent identical requests
        # train once; distinct requests just queue (toy-scale service).
        with app.state.train_lock:
            if model_id not in store:
                meta = app.state.engine.train(request, store.model_dir(model_id))
                store.add(model_id, meta)
        return {"model_id": model_id}

    @app.post("/v1/predict")
    def predict(request: PredictRequest) -> dict:
        store = app.state.store
        meta = store.get(request.model_id)
        if meta is None:
            raise BridgeError(
                404, "unknown_model", f"no model with id {request.model_id!r}"
            )
        pairs = app.state.engine.predict(
            meta, store.model_dir(request.model_id), request.texts
        )
        return {
            "predictions": [
                {"label": label, "score": score} for label, score in pairs
            ]
        }

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "mode": app.state.engine.mode,
            "loaded_models": app.state.store.ids(),
        }

    return app
