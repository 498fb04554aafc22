"""Client for remote fine-tune/predict services speaking the bridge protocol.

The wire contract is small: ``POST /v1/train`` takes examples plus
hyperparameters and returns ``{"model_id": ...}``; ``POST /v1/predict``
takes a model id plus texts and returns one ``{"label", "score"}`` per text
in order; ``GET /health`` reports readiness. Violations of that shape raise
:class:`ProtocolError`, service-reported failures raise
:class:`BackendError` with the service's code and message, and anything
network-level raises :class:`TransportError`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import requests

from .errors import BackendError, ProtocolError, TransportError
from .model import TrainingExample

MAX_REMOTE_LENGTH = 512


@dataclass(frozen=True)
class BackendSpec:
    """Which classifier backend a run uses.

    ``kind`` is "baseline" (local model) or "remote"; remote backends need
    an ``endpoint`` and pass ``model_name`` through to the service.
    """

    kind: str = "baseline"
    endpoint: str | None = None
    model_name: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("baseline", "remote"):
            raise ValueError(f"backend kind must be baseline or remote, got {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote backend requires an endpoint")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.endpoint:
            out["endpoint"] = self.endpoint
        if self.model_name:
            out["model_name"] = self.model_name
        return out


@dataclass(frozen=True)
class RemoteHyperparams:
    epochs: int = 8
    learning_rate: float = 5e-5
    max_length: int = 128
    batch_size: int = 8
    seed: int = 42

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 1 <= self.max_length <= MAX_REMOTE_LENGTH:
            raise ValueError(f"max_length must be in [1, {MAX_REMOTE_LENGTH}]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "max_length": self.max_length,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }


def _post_json(
    spec: BackendSpec,
    path: str,
    payload: Mapping[str, Any],
    session: requests.Session | None,
    timeout: float,
) -> Any:
    url = f"{(spec.endpoint or '').rstrip('/')}{path}"
    sess = session or requests
    try:
        response = sess.post(url, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"POST {url} failed: {exc}") from exc
    try:
        body = response.json()
    except ValueError as exc:
        raise ProtocolError(
            f"POST {path} returned non-JSON body (status {response.status_code})"
        ) from exc
    if response.status_code != 200:
        error = body.get("error") if isinstance(body, dict) else None
        if isinstance(error, dict) and "message" in error:
            raise BackendError(
                str(error["message"]),
                code=str(error.get("code", "")) or None,
                status=response.status_code,
            )
        raise ProtocolError(
            f"POST {path} failed with status {response.status_code} and no error body"
        )
    return body


def train_remote(
    spec: BackendSpec,
    examples: Sequence[TrainingExample],
    hyperparams: RemoteHyperparams | None = None,
    *,
    session: requests.Session | None = None,
    timeout: float = 600.0,
) -> str:
    """Submit a fine-tune job; returns the service's model id.

    Identical payloads are idempotent on conforming services (same id back),
    so retrying a training call is safe.
    """
    if not examples:
        raise ValueError("no training examples to submit")
    hyperparams = hyperparams or RemoteHyperparams()
    payload = {
        "model_name": spec.model_name,
        "examples": [{"text": e.prefixed_text, "label": e.label} for e in examples],
        "hyperparams": hyperparams.to_dict(),
    }
    body = _post_json(spec, "/v1/train", payload, session, timeout)
    if not isinstance(body, dict) or not isinstance(body.get("model_id"), str) or not body["model_id"]:
        raise ProtocolError("train response lacks a model_id string")
    return body["model_id"]


def predict_remote(
    spec: BackendSpec,
    model_id: str,
    texts: Sequence[str],
    *,
    session: requests.Session | None = None,
    timeout: float = 600.0,
) -> list[tuple[int, float]]:
    """Score texts with a previously trained remote model.

    Returns one ``(label, score)`` per input text, in input order. The
    response is validated: exactly one prediction per text, labels in
    {0, 1}, scores in [0, 1].
    """
    payload = {"model_id": model_id, "texts": list(texts)}
    body = _post_json(spec, "/v1/predict", payload, session, timeout)
    if not isinstance(body, dict) or not isinstance(body.get("predictions"), list):
        raise ProtocolError("predict response lacks a predictions list")
    predictions = body["predictions"]
    if len(predictions) != len(texts):
        raise ProtocolError(
            f"got {len(predictions)} predictions for {len(texts)} texts"
        )
    out: list[tuple[int, float]] = []
    for i, item in enumerate(predictions):
        if not isinstance(item, dict):
            raise ProtocolError(f"prediction {i} is not an object")
        label = item.get("label")
        score = item.get("score")
        if label not in (0, 1):
            raise ProtocolError(f"prediction {i} label {label!r} is not 0 or 1")
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise ProtocolError(f"prediction {i} score {score!r} is not numeric")
        if not 0.0 <= float(score) <= 1.0:
            raise ProtocolError(f"prediction {i} score {score!r} outside [0, 1]")
        out.append((int(label), float(score)))
    return out


def check_health(
    spec: BackendSpec,
    *,
    session: requests.Session | None = None,
    timeout: float = 10.0,
) -> dict[str, Any]:
    """GET /health; returns the status document or raises."""
    url = f"{(spec.endpoint or '').rstrip('/')}/health"
    sess = session or requests
    try:
        response = sess.get(url, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"GET {url} failed: {exc}") from exc
    if response.status_code != 200:
        raise BackendError(f"health check failed with {response.status_code}",
                           status=response.status_code)
    try:
        body = response.json()
    except ValueError as exc:
        raise ProtocolError("health response is not JSON") from exc
    if not isinstance(body, dict):
        raise ProtocolError("health response is not a JSON object")
    if body.get("status") != "ok":
        raise BackendError(f"service reports status {body.get('status')!r}")
    return body
