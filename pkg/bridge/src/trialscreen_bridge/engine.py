"""Training/inference engines behind the service endpoints.

``StubEngine`` performs no learning: it validates and records requests and
scores every text 0.5, which is enough to exercise the wire protocol
hermetically. ``TorchEngine`` fine-tunes a sequence-classification head on
the named checkpoint (a hub name or a local directory) and serves the
positive-class softmax probability. Both apply the 0.5 decision threshold
service-side so clients see uniform label semantics.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Sequence

from .errors import BridgeError
from .schemas import Hyperparams, TrainRequest

STUB_SCORE = 0.5
THRESHOLD = 0.5


def require_both_classes(request: TrainRequest) -> None:
    labels = {example.label for example in request.examples}
    if labels != {0, 1}:
        only = labels.pop()
        raise BridgeError(
            422, "single_class", f"training data has only label {only} examples"
        )


class StubEngine:
    mode = "stub"

    def train(self, request: TrainRequest, model_dir: Path) -> dict:
        return {"mode": self.mode, "n_examples": len(request.examples)}

    def predict(self, meta: dict, model_dir: Path, texts: Sequence[str]) -> list[tuple[int, float]]:
        label = 1 if STUB_SCORE >= THRESHOLD else 0
        return [(label, STUB_SCORE) for _ in texts]


class TorchEngine:
    mode = "full"

    def __init__(self, default_model: str | None = None):
        self.default_model = default_model
        self._cache: dict[str, tuple] = {}

    def _resolve_checkpoint(self, model_name: str | None) -> str:
        name = model_name or self.default_model
        if not name:
            raise BridgeError(
                404,
                "unknown_checkpoint",
                "no model_name given and no default checkpoint configured",
            )
        return name

    def _load(self, checkpoint: str, num_labels: int | None = 2):
        import torch  # noqa: F401  (defer heavy import until needed)
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        kwargs = {} if num_labels is None else {"num_labels": num_labels}
        try:
            tokenizer = AutoTokenizer.from_pretrained(checkpoint)
            model = AutoModelForSequenceClassification.from_pretrained(
                checkpoint, **kwargs
            )
        except (OSError, ValueError, EnvironmentError) as exc:
            raise BridgeError(
                404, "unknown_checkpoint", f"cannot load checkpoint {checkpoint!r}: {exc}"
            ) from exc
        return tokenizer, model

    def train(self, request: TrainRequest, model_dir: Path) -> dict:
        import torch

        checkpoint = self._resolve_checkpoint(request.model_name)
        hp: Hyperparams = request.hyperparams

        torch.manual_seed(hp.seed)
        random.seed(hp.seed)
        tokenizer, model = self._load(checkpoint)

        texts = [example.text for example in request.examples]
        labels = torch.tensor([example.label for example in request.examples])
        encoded = tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=hp.max_length,
            return_tensors="pt",
        )

        optimizer = torch.optim.AdamW(model.parameters(), lr=hp.learning_rate)
        model.train()
        n = len(texts)
        for _ in range(hp.epochs):
            for start in range(0, n, hp.batch_size):
                stop = min(start + hp.batch_size, n)
                batch = {key: value[start:stop] for key, value in encoded.items()}
                optimizer.zero_grad()
                out = model(**batch, labels=labels[start:stop])
                out.loss.backward()
                optimizer.step()

        model_dir.mkdir(parents=True, exist_ok=True)
        model.save_pretrained(model_dir)
        tokenizer.save_pretrained(model_dir)
        return {
            "mode": self.mode,
            "checkpoint": checkpoint,
            "n_examples": n,
            "max_length": hp.max_length,
        }

    def predict(self, meta: dict, model_dir: Path, texts: Sequence[str]) -> list[tuple[int, float]]:
        import torch

        if not texts:
            return []
        key = str(model_dir)
        if key not in self._cache:
            # num_labels=None: the saved config already carries the head size.
            self._cache[key] = self._load(key, num_labels=None)
        tokenizer, model = self._cache[key]
        model.eval()
        out: list[tuple[int, float]] = []
        max_length = int(meta.get("max_length", 128))
        with torch.no_grad():
            for start in range(0, len(texts), 32):
                chunk = list(texts[start : start + 32])
                encoded = tokenizer(
                    chunk,
                    padding=True,
                    truncation=True,
                    max_length=max_length,
                    return_tensors="pt",
                )
                probs = torch.softmax(model(**encoded).logits, dim=-1)[:, 1]
                for p in probs:
                    score = min(max(float(p), 0.0), 1.0)
                    out.append((1 if score >= THRESHOLD else 0, score))
        return out
