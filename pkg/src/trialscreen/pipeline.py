"""End-to-end composition of the screening stages.

This module owns the joins between stages: corpus -> sentences ->
candidates -> labeled examples -> per-criterion models -> predictions ->
reports. The CLI is a thin shell over these functions, and tests drive
them directly.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from . import remote
from .agreement import GoldLabel
from .errors import SingleClassError
from .evaluation import (
    SentenceKey,
    aggregate_metric_values,
    evaluate_run,
    kfold_trials,
    split_trials,
)
from .ingest import CorpusStore
from .keywords import CriterionId, ExtractedCandidate, KeywordBank, extract_candidates
from .model import (
    BaselineModel,
    Prediction,
    TrainConfig,
    TrainingExample,
    predict_baseline,
    train_baseline,
)
from .parsing import Sentence, sentences_for_trial
from .remote import BackendSpec, RemoteHyperparams

logger = logging.getLogger(__name__)


def extract_corpus(
    store: CorpusStore, bank: KeywordBank, max_tokens: int | None = 400
) -> tuple[list[Sentence], list[ExtractedCandidate]]:
    """Parse every trial and run keyword extraction over the sentences."""
    sentences: list[Sentence] = []
    for record in store:
        sentences.extend(
            sentences_for_trial(record.nct_id, record.eligibility_text, max_tokens)
        )
    return sentences, extract_candidates(sentences, bank)


def gold_map(gold: Iterable[GoldLabel]) -> dict[SentenceKey, int]:
    return {g.key: g.label for g in gold}


def training_examples(
    candidates: Iterable[ExtractedCandidate], gold: Mapping[SentenceKey, int]
) -> dict[CriterionId, list[TrainingExample]]:
    """Join candidates with sentence gold; unlabeled candidates are dropped."""
    examples: dict[CriterionId, list[TrainingExample]] = {}
    for candidate in candidates:
        key = (candidate.trial_id, candidate.sentence_index, candidate.criterion)
        label = gold.get(key)
        if label is None:
            continue
        examples.setdefault(candidate.criterion, []).append(
            TrainingExample(
                prefixed_text=candidate.prefixed_text,
                label=label,
                trial_id=candidate.trial_id,
                criterion=candidate.criterion,
                sentence_index=candidate.sentence_index,
            )
        )
    return examples


# A backend handle is a BaselineModel locally or a model_id string remotely.
BackendHandle = BaselineModel | str


def train_backend(
    spec: BackendSpec,
    examples: Sequence[TrainingExample],
    config: TrainConfig,
    hyperparams: RemoteHyperparams | None = None,
) -> BackendHandle:
    if spec.kind == "baseline":
        return train_baseline(examples, config)
    return remote.train_remote(spec, examples, hyperparams)


_REMOTE_SCORE_EPS = 1e-15


def predict_backend(
    spec: BackendSpec,
    handle: BackendHandle,
    candidates: Sequence[ExtractedCandidate],
) -> list[Prediction]:
    if spec.kind == "baseline":
        assert isinstance(handle, BaselineModel)
        return predict_baseline(handle, candidates)
    assert isinstance(handle, str)
    pairs = remote.predict_remote(spec, handle, [c.prefixed_text for c in candidates])
    # Remote scores may sit exactly on 0 or 1; nudge inside the open interval.
    return [
        Prediction(
            trial_id=c.trial_id,
            sentence_index=c.sentence_index,
            criterion=c.criterion,
            score=min(max(score, _REMOTE_SCORE_EPS), 1.0 - _REMOTE_SCORE_EPS),
            label=label,
        )
        for c, (label, score) in zip(candidates, pairs)
    ]


def train_criteria(
    examples_by_criterion: Mapping[CriterionId, Sequence[TrainingExample]],
    config: TrainConfig,
    spec: BackendSpec | None = None,
    hyperparams: RemoteHyperparams | None = None,
) -> tuple[dict[CriterionId, BackendHandle], list[CriterionId]]:
    """Train one model per criterion; single-class criteria are skipped.

    Returns (handles, skipped). Skips are reported, not fatal: a corpus can
    legitimately lack negative examples for a rare criterion.
    """
    spec = spec or BackendSpec()
    handles: dict[CriterionId, BackendHandle] = {}
    skipped: list[CriterionId] = []
    for criterion in sorted(examples_by_criterion, key=lambda c: c.value):
        examples = examples_by_criterion[criterion]
        try:
            handles[criterion] = train_backend(spec, examples, config, hyperparams)
        except SingleClassError as exc:
            logger.warning("skipping %s: %s", criterion.value, exc)
            skipped.append(criterion)
    return handles, skipped


def predictions_map(predictions: Iterable[Prediction]) -> dict[SentenceKey, int]:
    return {(p.trial_id, p.sentence_index, p.criterion): p.label for p in predictions}


def sort_predictions(predictions: Iterable[Prediction]) -> list[Prediction]:
    return sorted(
        predictions, key=lambda p: (p.trial_id, p.sentence_index, p.criterion.value)
    )


@dataclass(frozen=True)
class CrossvalResult:
    report: dict
    pooled_predictions: list[Prediction]


def _labeled_subset(
    candidates: Sequence[ExtractedCandidate],
    gold: Mapping[SentenceKey, int],
    trials: set[str],
) -> list[ExtractedCandidate]:
    return [
        c
        for c in candidates
        if c.trial_id in trials
        and (c.trial_id, c.sentence_index, c.criterion) in gold
    ]


def run_crossval(
    store: CorpusStore,
    gold: Mapping[SentenceKey, int],
    bank: KeywordBank,
    *,
    k: int = 5,
    seed: int = 0,
    config: TrainConfig | None = None,
    spec: BackendSpec | None = None,
    hyperparams: RemoteHyperparams | None = None,
    max_tokens: int | None = 400,
) -> CrossvalResult:
    """Trial-grouped k-fold cross-validation of the full pipeline.

    Each fold trains on the labeled candidates of its train trials and
    predicts the labeled candidates of its test trials; every labeled test
    candidate is predicted exactly once across folds. The report carries
    per-fold evaluations, mean/stdev aggregates, and a pooled evaluation
    over all folds' predictions. Criteria skipped in a fold (single-class
    training labels) are listed and their test keys left out of pooling.
    """
    config = config or TrainConfig()
    spec = spec or BackendSpec()
    _, candidates = extract_corpus(store, bank, max_tokens)
    plan = kfold_trials(store.trial_ids(), k=k, seed=seed)

    fold_reports: list[dict] = []
    pooled: list[Prediction] = []
    pooled_gold: dict[SentenceKey, int] = {}
    for fold in range(plan.k):
        train_ids, test_ids = plan.fold_trials(fold)
        train_candidates = _labeled_subset(candidates, gold, set(train_ids))
        test_candidates = _labeled_subset(candidates, gold, set(test_ids))
        examples = training_examples(train_candidates, gold)
        handles, skipped = train_criteria(examples, config, spec, hyperparams)

        predictable = [c for c in test_candidates if c.criterion in handles]
        fold_predictions: list[Prediction] = []
        for criterion, handle in handles.items():
            subset = [c for c in predictable if c.criterion == criterion]
            if subset:
                fold_predictions.extend(predict_backend(spec, handle, subset))
        fold_predictions = sort_predictions(fold_predictions)

        fold_pred_map = predictions_map(fold_predictions)
        fold_gold = {key: gold[key] for key in fold_pred_map}
        fold_reports.append(
            {
                "fold": fold,
                "n_train_trials": len(train_ids),
                "n_test_trials": len(test_ids),
                "test_trials": list(test_ids),
                "skipped_criteria": [c.value for c in skipped],
                "evaluation": evaluate_run(fold_pred_map, fold_gold),
            }
        )
        pooled.extend(fold_predictions)
        pooled_gold.update(fold_gold)

    pooled = sort_predictions(pooled)
    pooled_map = predictions_map(pooled)
    report = {
        "k": plan.k,
        "seed": seed,
        "folds": fold_reports,
        "aggregate": _aggregate_folds(fold_reports),
        "pooled": evaluate_run(pooled_map, pooled_gold),
    }
    return CrossvalResult(report=report, pooled_predictions=pooled)


def _aggregate_folds(fold_reports: Sequence[dict]) -> dict:
    """Mean/stdev of each defined metric across folds, per criterion/level."""
    values: dict[tuple[str, str, str], list[float]] = {}
    for fold_report in fold_reports:
        for criterion, levels in fold_report["evaluation"]["criteria"].items():
            for level in ("sentence_level", "trial_level"):
                for source in ("metrics", "micro"):
                    for name, value in levels[level][source].items():
                        if isinstance(value, (int, float)):
                            key = (criterion, level, f"{source}.{name}")
                            values.setdefault(key, []).append(float(value))
    aggregate: dict = {}
    for (criterion, level, name), series in sorted(values.items()):
        aggregate.setdefault(criterion, {}).setdefault(level, {})[name] = {
            **aggregate_metric_values(series),
            "n_folds": len(series),
        }
    return aggregate


def run_holdout(
    store: CorpusStore,
    gold: Mapping[SentenceKey, int],
    bank: KeywordBank,
    *,
    ratio: float = 0.7,
    seed: int = 0,
    config: TrainConfig | None = None,
    spec: BackendSpec | None = None,
    hyperparams: RemoteHyperparams | None = None,
    max_tokens: int | None = 400,
) -> dict:
    """Single train/test split: train, predict held-out trials, evaluate."""
    config = config or TrainConfig()
    spec = spec or BackendSpec()
    _, candidates = extract_corpus(store, bank, max_tokens)
    plan = split_trials(store.trial_ids(), ratio=ratio, seed=seed)

    train_candidates = _labeled_subset(candidates, gold, set(plan.train_trials))
    test_candidates = _labeled_subset(candidates, gold, set(plan.test_trials))
    examples = training_examples(train_candidates, gold)
    handles, skipped = train_criteria(examples, config, spec, hyperparams)

    predictions: list[Prediction] = []
    for criterion, handle in handles.items():
        subset = [c for c in test_candidates if c.criterion == criterion]
        if subset:
            predictions.extend(predict_backend(spec, handle, subset))
    predictions = sort_predictions(predictions)
    pred_map = predictions_map(predictions)
    test_gold = {key: gold[key] for key in pred_map}
    return {
        "split": {
            "ratio": ratio,
            "seed": seed,
            "n_train_trials": len(plan.train_trials),
            "n_test_trials": len(plan.test_trials),
        },
        "skipped_criteria": [c.value for c in skipped],
        "evaluation": evaluate_run(pred_map, test_gold) if pred_map else {"criteria": {}},
    }


_CANDIDATE_FIELDS = (
    "trial_id",
    "sentence_index",
    "criterion",
    "prefixed_text",
    "matched_phrases",
)


def write_candidates(candidates: Iterable[ExtractedCandidate], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for c in candidates:
            record = {
                "trial_id": c.trial_id,
                "sentence_index": c.sentence_index,
                "criterion": c.criterion.value,
                "prefixed_text": c.prefixed_text,
                "matched_phrases": list(c.matched_phrases),
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_candidates(path: str | Path) -> Iterator[ExtractedCandidate]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            yield ExtractedCandidate(
                trial_id=record["trial_id"],
                sentence_index=record["sentence_index"],
                criterion=CriterionId(record["criterion"]),
                prefixed_text=record["prefixed_text"],
                matched_phrases=tuple(record["matched_phrases"]),
            )


def write_predictions(predictions: Iterable[Prediction], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for p in predictions:
            record = {
                "trial_id": p.trial_id,
                "sentence_index": p.sentence_index,
                "criterion": p.criterion.value,
                "score": p.score,
                "label": p.label,
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_predictions(path: str | Path) -> Iterator[Prediction]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            yield Prediction(
                trial_id=record["trial_id"],
                sentence_index=record["sentence_index"],
                criterion=CriterionId(record["criterion"]),
                score=record["score"],
                label=record["label"],
            )
