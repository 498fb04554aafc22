"""Content-addressed model identity.

The model id is a sha256 over the canonical JSON form of the effective
training request (checkpoint name, examples in order, resolved
hyperparameters), so identical requests are idempotent and reordered
examples are a different model.
"""

from __future__ import annotations

import hashlib
import json

from .schemas import Hyperparams, TrainRequest


def model_id_for(request: TrainRequest) -> str:
    hyperparams: Hyperparams = request.hyperparams
    canonical = json.dumps(
        {
            "model_name": request.model_name or "",
            "examples": [{"text": e.text, "label": e.label} for e in request.examples],
            "hyperparams": {
                "epochs": hyperparams.epochs,
                "learning_rate": hyperparams.learning_rate,
                "max_length": hyperparams.max_length,
                "batch_size": hyperparams.batch_size,
                "seed": hyperparams.seed,
            },
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
