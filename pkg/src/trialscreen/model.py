"""TF-IDF features and the deterministic logistic-regression baseline.

One model is trained per criterion on prefixed sentence texts. Everything
here is bit-reproducible for a fixed input set and config: examples are
sorted into a canonical order before fitting, the vocabulary is ordered by
first appearance, training is full-batch gradient descent from a zero
initialization, and no stochastic component exists outside the seed kept
for provenance.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from . import _kernels
from .errors import EmptyCorpusError, EmptyDatasetError, SingleClassError
from .keywords import CriterionId

MODEL_FORMAT_VERSION = 1

# Letters, digits, and in-word hyphens survive; underscores and all other
# punctuation separate tokens.
_TOKEN_RE = re.compile(r"(?:[^\W_]|-)+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything but letters, digits, and hyphens."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(eq=False)
class FeatureSpace:
    """Vocabulary (token -> column, first-appearance order) and idf weights."""

    vocabulary: dict[str, int]
    idf: np.ndarray


def fit_features(corpus: Sequence[str]) -> FeatureSpace:
    """Fit vocabulary and idf over a document collection.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1 with N documents; the smoothing
    keeps idf finite and positive even for tokens in every document.
    Raises :class:`EmptyCorpusError` when there are no documents at all.
    """
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot fit features on an empty corpus")
    vocabulary: dict[str, int] = {}
    df: list[int] = []
    for text in corpus:
        seen: set[int] = set()
        for token in tokenize(text):
            column = vocabulary.get(token)
            if column is None:
                column = len(vocabulary)
                vocabulary[token] = column
                df.append(0)
            seen.add(column)
        for column in seen:
            df[column] += 1
    n_docs = len(corpus)
    df_arr = np.asarray(df, dtype=np.float64)
    idf = np.log((1.0 + n_docs) / (1.0 + df_arr)) + 1.0
    return FeatureSpace(vocabulary=vocabulary, idf=idf)


def vectorize(
    space: FeatureSpace, texts: Sequence[str]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Encode texts as L2-normalized count*idf rows in CSR form.

    Unknown tokens are dropped; a text with no known tokens becomes an
    all-zero row. Column indices within each row are ascending.
    """
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        counts: dict[int, int] = {}
        for token in tokenize(text):
            column = space.vocabulary.get(token)
            if column is not None:
                counts[column] = counts.get(column, 0) + 1
        columns = sorted(counts)
        values = np.array([counts[c] * space.idf[c] for c in columns], dtype=np.float64)
        norm = float(np.linalg.norm(values))
        if norm > 0.0:
            values /= norm
        indices.extend(columns)
        data.extend(values.tolist())
        indptr.append(len(indices))
    return (
        np.asarray(indptr, dtype=np.int64),
        np.asarray(indices, dtype=np.int64),
        np.asarray(data, dtype=np.float64),
    )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 50
    l2_lambda: float = 1e-4
    seed: int = 42
    threshold: float = 0.5
    pos_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be strictly between 0 and 1")
        if self.pos_weight <= 0:
            raise ValueError("pos_weight must be positive")

    def to_dict(self) -> dict[str, float | int]:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "l2_lambda": self.l2_lambda,
            "seed": self.seed,
            "threshold": self.threshold,
            "pos_weight": self.pos_weight,
        }


@dataclass(frozen=True)
class TrainingExample:
    prefixed_text: str
    label: int
    trial_id: str
    criterion: CriterionId
    sentence_index: int = 0

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


class Candidate(Protocol):
    """What predict needs from a sentence: identity plus prefixed text."""

    trial_id: str
    sentence_index: int
    criterion: CriterionId
    prefixed_text: str


@dataclass(frozen=True)
class Prediction:
    trial_id: str
    sentence_index: int
    criterion: CriterionId
    score: float
    label: int

    def __post_init__(self) -> None:
        if not 0.0 < self.score < 1.0:
            raise ValueError(f"score must be in (0, 1), got {self.score!r}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(eq=False)
class BaselineModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    weights: np.ndarray
    bias: float
    config: TrainConfig
    loss_history: np.ndarray | None = field(default=None, repr=False)

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def feature_space(self) -> FeatureSpace:
        return FeatureSpace(vocabulary=self.vocabulary, idf=self.idf)


def _canonical_order(examples: Sequence[TrainingExample]) -> list[TrainingExample]:
    return sorted(examples, key=lambda e: (e.trial_id, e.sentence_index))


def train_baseline(
    examples: Iterable[TrainingExample], config: TrainConfig | None = None
) -> BaselineModel:
    """Train one criterion's model with full-batch gradient descent.

    Examples are sorted by (trial_id, sentence_index) so input order never
    changes the result. Raises :class:`EmptyDatasetError` with no examples
    and :class:`SingleClassError` when labels are all one class.
    """
    config = config or TrainConfig()
    ordered = _canonical_order(list(examples))
    if not ordered:
        raise EmptyDatasetError("no training examples")
    labels = np.asarray([e.label for e in ordered], dtype=np.float64)
    if len(set(labels.tolist())) < 2:
        only = int(labels[0])
        raise SingleClassError(f"all {len(ordered)} examples have label {only}")

    space = fit_features([e.prefixed_text for e in ordered])
    indptr, indices, data = vectorize(space, [e.prefixed_text for e in ordered])
    sample_weight = np.where(labels == 1.0, config.pos_weight, 1.0)
    weights, bias, losses = _kernels.train_logreg(
        indptr,
        indices,
        data,
        labels,
        sample_weight,
        len(space.vocabulary),
        config.learning_rate,
        config.epochs,
        config.l2_lambda,
    )
    return BaselineModel(
        vocabulary=space.vocabulary,
        idf=space.idf,
        weights=weights,
        bias=float(bias),
        config=config,
        loss_history=losses,
    )


# Keeps sigmoid outputs inside the open interval (0, 1) after rounding.
_SCORE_EPS = 1e-15


def score_texts(model: BaselineModel, texts: Sequence[str]) -> np.ndarray:
    """Sigmoid scores for texts under a trained model, clipped to (0, 1)."""
    indptr, indices, data = vectorize(model.feature_space, texts)
    z = _kernels.scores(indptr, indices, data, model.weights, model.bias)
    e = np.exp(-np.abs(z))
    p = np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.clip(p, _SCORE_EPS, 1.0 - _SCORE_EPS)


def predict_baseline(
    model: BaselineModel, candidates: Sequence[Candidate]
) -> list[Prediction]:
    """Score candidates and threshold into labels (score >= threshold -> 1)."""
    if not candidates:
        return []
    scores = score_texts(model, [c.prefixed_text for c in candidates])
    threshold = model.config.threshold
    return [
        Prediction(
            trial_id=c.trial_id,
            sentence_index=c.sentence_index,
            criterion=c.criterion,
            score=float(s),
            label=int(s >= threshold),
        )
        for c, s in zip(candidates, scores)
    ]


def save_model(model: BaselineModel, path: str | Path) -> None:
    """Serialize to JSON. Identical models produce identical bytes."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "vocabulary": model.vocabulary,
        "idf": model.idf.tolist(),
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "config": model.config.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, ensure_ascii=False, separators=(",", ":"))
        handle.write("\n")


def load_model(path: str | Path) -> BaselineModel:
    """Load a serialized model; reruns of save(load(x)) are byte-identical."""
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"unsupported model format {payload.get('format_version')!r}"
        )
    vocabulary = {str(k): int(v) for k, v in payload["vocabulary"].items()}
    idf = np.asarray(payload["idf"], dtype=np.float64)
    weights = np.asarray(payload["weights"], dtype=np.float64)
    if not (len(vocabulary) == idf.shape[0] == weights.shape[0]):
        raise ValueError("model file is inconsistent: vocab/idf/weights sizes differ")
    return BaselineModel(
        vocabulary=vocabulary,
        idf=idf,
        weights=weights,
        bias=float(payload["bias"]),
        config=TrainConfig(**payload["config"]),
    )
