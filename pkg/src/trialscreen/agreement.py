"""Dual-annotation agreement, adjudication, and gold-label derivation.

Labels are binary: 1 means the sentence excludes patients under the
criterion, 0 means it does not. Sentence labels are keyed by
``(trial_id, sentence_index, criterion)`` so two annotators' files can be
joined exactly; any key present on one side only is an error, never a
silent drop.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    DegenerateMarginalsError,
    KeyMismatchError,
    UnresolvedConflictError,
)
from .keywords import CriterionId

LabelKey = tuple[str, int, CriterionId]

_PROVENANCE = ("agreed", "adjudicated")


@dataclass(frozen=True)
class SentenceLabel:
    trial_id: str
    sentence_index: int
    criterion: CriterionId
    annotator: str
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")

    @property
    def key(self) -> LabelKey:
        return (self.trial_id, self.sentence_index, self.criterion)


@dataclass(frozen=True)
class GoldLabel:
    trial_id: str
    sentence_index: int
    criterion: CriterionId
    label: int
    provenance: str

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.provenance not in _PROVENANCE:
            raise ValueError(f"provenance must be one of {_PROVENANCE}")

    @property
    def key(self) -> LabelKey:
        return (self.trial_id, self.sentence_index, self.criterion)


@dataclass(frozen=True)
class TrialGold:
    trial_id: str
    criterion: CriterionId
    label: int


def labels_by_key(
    labels: Iterable[SentenceLabel], annotator: str | None = None
) -> dict[LabelKey, int]:
    """Index labels by key, optionally filtering to one annotator.

    Duplicate keys are a data error (same sentence labeled twice).
    """
    indexed: dict[LabelKey, int] = {}
    for label in labels:
        if annotator is not None and label.annotator != annotator:
            continue
        if label.key in indexed:
            raise ValueError(f"duplicate label for key {label.key}")
        indexed[label.key] = label.label
    return indexed


def _sort_key(key: LabelKey) -> tuple[str, int, str]:
    return (key[0], key[1], key[2].value)


def _check_keys(a: Mapping[LabelKey, int], b: Mapping[LabelKey, int]) -> None:
    if a.keys() == b.keys():
        return
    only_a = sorted(a.keys() - b.keys(), key=_sort_key)[:5]
    only_b = sorted(b.keys() - a.keys(), key=_sort_key)[:5]
    raise KeyMismatchError(
        f"label keys differ: {len(a.keys() - b.keys())} only in first "
        f"(e.g. {only_a}), {len(b.keys() - a.keys())} only in second (e.g. {only_b})"
    )


def percent_agreement(a: Mapping[LabelKey, int], b: Mapping[LabelKey, int]) -> float:
    """Fraction of keys on which both annotators gave the same label."""
    _check_keys(a, b)
    if not a:
        raise ValueError("no keys to compare")
    same = sum(1 for key, label in a.items() if b[key] == label)
    return same / len(a)


def cohen_kappa(a: Mapping[LabelKey, int], b: Mapping[LabelKey, int]) -> float:
    """Cohen's kappa for two binary annotators over identical keys.

    With cell counts n11/n10/n01/n00 (first annotator's label first):
    po = (n11 + n00) / n and
    pe = ((n11+n10)(n11+n01) + (n00+n10)(n00+n01)) / n^2.
    When pe == 1 (both annotators constant and identical) kappa is
    undefined and :class:`DegenerateMarginalsError` is raised.
    """
    _check_keys(a, b)
    n = len(a)
    if n == 0:
        raise ValueError("no keys to compare")
    n11 = n10 = n01 = n00 = 0
    for key, label_a in a.items():
        label_b = b[key]
        if label_a == 1 and label_b == 1:
            n11 += 1
        elif label_a == 1:
            n10 += 1
        elif label_b == 1:
            n01 += 1
        else:
            n00 += 1
    pe_numerator = (n11 + n10) * (n11 + n01) + (n00 + n10) * (n00 + n01)
    if pe_numerator == n * n:
        raise DegenerateMarginalsError(
            "chance agreement is 1 (both annotators constant); kappa undefined"
        )
    po = (n11 + n00) / n
    pe = pe_numerator / (n * n)
    return (po - pe) / (1.0 - pe)


def agreement_report(
    a: Mapping[LabelKey, int], b: Mapping[LabelKey, int]
) -> dict[str, dict[str, object]]:
    """Per-criterion n, percent agreement, and kappa ("undefined" when degenerate)."""
    _check_keys(a, b)
    criteria = sorted({key[2] for key in a}, key=lambda c: c.value)
    report: dict[str, dict[str, object]] = {}
    for criterion in criteria:
        sub_a = {key: label for key, label in a.items() if key[2] == criterion}
        sub_b = {key: b[key] for key in sub_a}
        try:
            kappa: object = cohen_kappa(sub_a, sub_b)
        except DegenerateMarginalsError:
            kappa = "undefined"
        report[criterion.value] = {
            "n": len(sub_a),
            "percent_agreement": percent_agreement(sub_a, sub_b),
            "kappa": kappa,
        }
    return report


def adjudicate(
    a: Mapping[LabelKey, int],
    b: Mapping[LabelKey, int],
    resolutions: Mapping[LabelKey, int] | None = None,
) -> list[GoldLabel]:
    """Merge two annotators into gold labels.

    Agreements pass through with provenance "agreed"; disagreements take the
    adjudicator's label with provenance "adjudicated". Disagreements without
    a resolution raise :class:`UnresolvedConflictError` listing the keys.
    Output is sorted by key so reruns are byte-identical.
    """
    _check_keys(a, b)
    resolutions = resolutions or {}
    unresolved = sorted(
        (key for key, label in a.items() if b[key] != label and key not in resolutions),
        key=_sort_key,
    )
    if unresolved:
        shown = ", ".join(f"{k[0]}/{k[1]}/{k[2].value}" for k in unresolved[:5])
        raise UnresolvedConflictError(
            f"{len(unresolved)} unresolved disagreements (e.g. {shown})"
        )
    gold: list[GoldLabel] = []
    for key in sorted(a, key=_sort_key):
        if a[key] == b[key]:
            label, provenance = a[key], "agreed"
        else:
            label, provenance = resolutions[key], "adjudicated"
        gold.append(
            GoldLabel(
                trial_id=key[0],
                sentence_index=key[1],
                criterion=key[2],
                label=label,
                provenance=provenance,
            )
        )
    return gold


def derive_trial_gold(gold: Iterable[GoldLabel]) -> list[TrialGold]:
    """Roll sentence gold up to trials: positive iff any sentence is positive.

    A (trial, criterion) pair appears only when at least one of its
    sentences carries a gold label; absence stays absence.
    """
    rolled: dict[tuple[str, CriterionId], int] = {}
    for item in gold:
        key = (item.trial_id, item.criterion)
        rolled[key] = max(rolled.get(key, 0), item.label)
    return [
        TrialGold(trial_id=trial_id, criterion=criterion, label=label)
        for (trial_id, criterion), label in sorted(
            rolled.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
        )
    ]


_LABEL_COLUMNS = ("trial_id", "sentence_index", "criterion", "annotator", "label")
_GOLD_COLUMNS = ("trial_id", "sentence_index", "criterion", "label", "provenance")
_TRIAL_GOLD_COLUMNS = ("trial_id", "criterion", "label")


def write_label_file(labels: Iterable[SentenceLabel], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_LABEL_COLUMNS)
        for item in labels:
            writer.writerow(
                [item.trial_id, item.sentence_index, item.criterion.value,
                 item.annotator, item.label]
            )
            count += 1
    return count


def read_label_file(path: str | Path) -> list[SentenceLabel]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        return [
            SentenceLabel(
                trial_id=row["trial_id"],
                sentence_index=int(row["sentence_index"]),
                criterion=CriterionId(row["criterion"]),
                annotator=row["annotator"],
                label=int(row["label"]),
            )
            for row in reader
        ]


def write_gold_file(gold: Iterable[GoldLabel], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_GOLD_COLUMNS)
        for item in gold:
            writer.writerow(
                [item.trial_id, item.sentence_index, item.criterion.value,
                 item.label, item.provenance]
            )
            count += 1
    return count


def read_gold_file(path: str | Path) -> list[GoldLabel]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        return [
            GoldLabel(
                trial_id=row["trial_id"],
                sentence_index=int(row["sentence_index"]),
                criterion=CriterionId(row["criterion"]),
                label=int(row["label"]),
                provenance=row.get("provenance", "agreed"),
            )
            for row in reader
        ]


def write_trial_gold_file(gold: Iterable[TrialGold], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_TRIAL_GOLD_COLUMNS)
        for item in gold:
            writer.writerow([item.trial_id, item.criterion.value, item.label])
            count += 1
    return count


def read_trial_gold_file(path: str | Path) -> list[TrialGold]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        return [
            TrialGold(
                trial_id=row["trial_id"],
                criterion=CriterionId(row["criterion"]),
                label=int(row["label"]),
            )
            for row in reader
        ]
