"""Classification metrics, trial-level rollup, and deterministic splits.

Predictions and gold labels meet here as mappings from the sentence key
``(trial_id, sentence_index, criterion)`` to a binary label. The two maps
must cover exactly the same keys; a mismatch is an alignment bug upstream
and raises instead of being patched over.

Undefined ratios stay undefined: a metric whose denominator is zero is
``None`` (absent in reports), never 0 or 1 by fiat.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import EmptyMatrixError, KeyMismatchError, TooFewTrialsError
from .keywords import CriterionId

SentenceKey = tuple[str, int, CriterionId]
TrialKey = tuple[str, CriterionId]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion(
    predictions: Mapping[Hashable, int], gold: Mapping[Hashable, int]
) -> ConfusionMatrix:
    """Count the four cells over identical key sets."""
    if predictions.keys() != gold.keys():
        only_p = len(predictions.keys() - gold.keys())
        only_g = len(gold.keys() - predictions.keys())
        raise KeyMismatchError(
            f"prediction/gold keys differ: {only_p} only predicted, {only_g} only gold"
        )
    tp = fp = fn = tn = 0
    for key, predicted in predictions.items():
        actual = gold[key]
        if predicted == 1 and actual == 1:
            tp += 1
        elif predicted == 1:
            fp += 1
        elif actual == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class MetricSet:
    """Positive-class precision/recall/F1 and accuracy; None means undefined.

    F1 is defined only when precision and recall both are and their sum is
    positive.
    """

    precision: float | None
    recall: float | None
    f1: float | None
    accuracy: float

    def to_dict(self) -> dict[str, float | list[str]]:
        out: dict[str, float | list[str]] = {"accuracy": self.accuracy}
        undefined = []
        for name in ("precision", "recall", "f1"):
            value = getattr(self, name)
            if value is None:
                undefined.append(name)
            else:
                out[name] = value
        if undefined:
            out["undefined"] = undefined
        return out


def metrics(matrix: ConfusionMatrix) -> MetricSet:
    """Positive-class metrics from a confusion matrix.

    Precision is undefined when nothing was predicted positive, recall when
    nothing is gold positive. Raises :class:`EmptyMatrixError` on n == 0.
    """
    n = matrix.n
    if n == 0:
        raise EmptyMatrixError("confusion matrix has no observations")
    precision = matrix.tp / (matrix.tp + matrix.fp) if matrix.tp + matrix.fp else None
    recall = matrix.tp / (matrix.tp + matrix.fn) if matrix.tp + matrix.fn else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    accuracy = (matrix.tp + matrix.tn) / n
    return MetricSet(precision=precision, recall=recall, f1=f1, accuracy=accuracy)


def micro_metrics(matrix: ConfusionMatrix) -> MetricSet:
    """Micro-averaged metrics pooling both classes of one binary task.

    Every observation is exactly one of tp/fp/fn/tn with classes pooled, so
    micro precision, recall, F1, and accuracy all equal (tp + tn) / n; kept
    as a separate function so reports label the averaging mode explicitly.
    """
    n = matrix.n
    if n == 0:
        raise EmptyMatrixError("confusion matrix has no observations")
    pooled = (matrix.tp + matrix.tn) / n
    return MetricSet(precision=pooled, recall=pooled, f1=pooled, accuracy=pooled)


def trial_rollup(
    predictions: Mapping[SentenceKey, int], gold: Mapping[SentenceKey, int]
) -> tuple[dict[TrialKey, int], dict[TrialKey, int]]:
    """Roll sentence labels up to (trial, criterion): positive iff any is.

    Both maps are rolled with the same rule over the same keys, so the
    outputs cover identical trial keys.
    """
    if predictions.keys() != gold.keys():
        raise KeyMismatchError("prediction/gold sentence keys differ")
    rolled_p: dict[TrialKey, int] = {}
    rolled_g: dict[TrialKey, int] = {}
    for sentence_key, predicted in predictions.items():
        key = (sentence_key[0], sentence_key[2])
        rolled_p[key] = max(rolled_p.get(key, 0), predicted)
        rolled_g[key] = max(rolled_g.get(key, 0), gold[sentence_key])
    return rolled_p, rolled_g


def _level_report(
    predictions: Mapping[Hashable, int], gold: Mapping[Hashable, int]
) -> dict[str, object]:
    matrix = confusion(predictions, gold)
    return {
        "confusion": matrix.to_dict(),
        "metrics": metrics(matrix).to_dict(),
        "micro": micro_metrics(matrix).to_dict(),
        "n": matrix.n,
    }


def evaluate_run(
    predictions: Mapping[SentenceKey, int], gold: Mapping[SentenceKey, int]
) -> dict[str, object]:
    """Per-criterion sentence-level and trial-level evaluation report."""
    if predictions.keys() != gold.keys():
        raise KeyMismatchError("prediction/gold sentence keys differ")
    criteria = sorted({key[2] for key in predictions}, key=lambda c: c.value)
    report: dict[str, object] = {"criteria": {}}
    for criterion in criteria:
        sub_p = {k: v for k, v in predictions.items() if k[2] == criterion}
        sub_g = {k: gold[k] for k in sub_p}
        rolled_p, rolled_g = trial_rollup(sub_p, sub_g)
        report["criteria"][criterion.value] = {
            "sentence_level": _level_report(sub_p, sub_g),
            "trial_level": _level_report(rolled_p, rolled_g),
        }
    return report


# Knuth's 64-bit MMIX congruential step drives the shuffles. Fixed here, not
# delegated to random.Random, so split plans reproduce across processes,
# versions, and reimplementations in other languages.
_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407
_MASK64 = (1 << 64) - 1


def _shuffled(ids: Sequence[str], seed: int) -> list[str]:
    """Fisher-Yates over lexicographically sorted ids, LCG-driven.

    state' = (a * state + c) mod 2^64; each draw uses the top 31 bits
    (state >> 33) modulo the live range.
    """
    items = sorted(ids)
    state = seed & _MASK64
    for i in range(len(items) - 1, 0, -1):
        state = (_LCG_MULT * state + _LCG_INC) & _MASK64
        j = (state >> 33) % (i + 1)
        items[i], items[j] = items[j], items[i]
    return items


@dataclass(frozen=True)
class SplitPlan:
    train_trials: tuple[str, ...]
    test_trials: tuple[str, ...]
    ratio: float
    seed: int

    def __post_init__(self) -> None:
        overlap = set(self.train_trials) & set(self.test_trials)
        if overlap:
            raise ValueError(f"train/test overlap: {sorted(overlap)[:5]}")


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: dict[str, int]
    seed: int

    def fold_trials(self, fold: int) -> tuple[list[str], list[str]]:
        """(train_ids, test_ids) for one fold, each sorted."""
        if not 0 <= fold < self.k:
            raise ValueError(f"fold must be in [0, {self.k}), got {fold}")
        test = sorted(t for t, f in self.assignment.items() if f == fold)
        train = sorted(t for t, f in self.assignment.items() if f != fold)
        return train, test


def split_trials(trials: Iterable[str], ratio: float = 0.7, seed: int = 0) -> SplitPlan:
    """Deterministic train/test split at trial granularity.

    Train size is ceil(ratio * n); the epsilon keeps float products that
    should be exact integers (0.7 * 10 = 7.000...1) from rounding up.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    ids = sorted(set(trials))
    if len(ids) < 2:
        raise TooFewTrialsError(f"need at least 2 trials to split, got {len(ids)}")
    shuffled = _shuffled(ids, seed)
    n_train = math.ceil(ratio * len(ids) - 1e-9)
    n_train = min(max(n_train, 1), len(ids) - 1)
    return SplitPlan(
        train_trials=tuple(shuffled[:n_train]),
        test_trials=tuple(shuffled[n_train:]),
        ratio=ratio,
        seed=seed,
    )


def kfold_trials(trials: Iterable[str], k: int = 5, seed: int = 0) -> FoldPlan:
    """Deterministic k-fold assignment: shuffle, then round-robin i mod k.

    Fold sizes differ by at most one; every trial lands in exactly one fold.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    ids = sorted(set(trials))
    if len(ids) < k:
        raise TooFewTrialsError(f"need at least {k} trials for {k} folds, got {len(ids)}")
    shuffled = _shuffled(ids, seed)
    assignment = {trial_id: i % k for i, trial_id in enumerate(shuffled)}
    return FoldPlan(k=k, assignment=assignment, seed=seed)


def aggregate_metric_values(values: Sequence[float]) -> dict[str, float]:
    """Mean and sample standard deviation (0.0 for a single value)."""
    if not values:
        raise ValueError("no values to aggregate")
    mean = statistics.fmean(values)
    stdev = statistics.stdev(values) if len(values) > 1 else 0.0
    return {"mean": mean, "stdev": stdev}
