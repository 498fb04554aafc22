"""Keyword banks and candidate extraction for the seven exclusion criteria.

Each criterion owns a small bank of lowercase surface phrases. A sentence
becomes a candidate for a criterion when any phrase occurs in its prefixed
text as a case-insensitive substring bounded by non-alphanumeric characters
(or string edges) on both sides. The boundary check keeps "hiv" from firing
inside "archived" while still matching through punctuation and hyphens.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import AbstractSet, Iterable, Mapping

from .errors import EmptyGoldError
from .parsing import Sentence


class CriterionId(str, enum.Enum):
    PRIOR_MALIGNANCY = "prior_malignancy"
    HIV = "hiv"
    HBV = "hbv"
    HCV = "hcv"
    PSYCHIATRIC_ILLNESS = "psychiatric_illness"
    SUB_DRUG_ALC = "sub_drug_alc"
    AUTOIMMUNE = "autoimmune"


@dataclass(frozen=True)
class KeywordSet:
    """The phrase bank for one criterion. Phrases are lowercase and unique."""

    criterion: CriterionId
    phrases: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.phrases:
            raise ValueError(f"{self.criterion.value}: phrase bank is empty")
        for phrase in self.phrases:
            if not phrase or phrase != phrase.strip():
                raise ValueError(f"{self.criterion.value}: bad phrase {phrase!r}")
            if phrase != phrase.lower():
                raise ValueError(f"{self.criterion.value}: phrase not lowercase: {phrase!r}")
        if len(set(self.phrases)) != len(self.phrases):
            raise ValueError(f"{self.criterion.value}: duplicate phrases")


@dataclass(frozen=True)
class ExtractedCandidate:
    """A sentence matched to a criterion, with the phrases that fired."""

    trial_id: str
    sentence_index: int
    criterion: CriterionId
    prefixed_text: str
    matched_phrases: tuple[str, ...]


KeywordBank = dict[CriterionId, KeywordSet]


def _bank_from_mapping(payload: Mapping[str, Iterable[str]]) -> KeywordBank:
    bank: KeywordBank = {}
    for name, phrases in payload.items():
        criterion = CriterionId(name)
        seen: list[str] = []
        for phrase in phrases:
            normalized = " ".join(str(phrase).lower().split())
            if normalized and normalized not in seen:
                seen.append(normalized)
        bank[criterion] = KeywordSet(criterion=criterion, phrases=tuple(seen))
    return bank


def load_keyword_bank(path: str | Path) -> KeywordBank:
    """Load a bank from a JSON file mapping criterion name to phrase list.

    Phrases are lowercased, whitespace-normalized, and deduplicated in
    first-appearance order. Unknown criterion names raise ``ValueError``.
    """
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict):
        raise ValueError("keyword file must be a JSON object")
    return _bank_from_mapping(payload)


def default_keyword_bank() -> KeywordBank:
    """The bank shipped with the package, covering all seven criteria."""
    text = resources.files("trialscreen").joinpath("data/keywords.json").read_text("utf-8")
    bank = _bank_from_mapping(json.loads(text))
    missing = [c.value for c in CriterionId if c not in bank]
    if missing:
        raise RuntimeError(f"bundled bank is missing criteria: {missing}")
    return bank


def _phrase_occurs(haystack: str, phrase: str) -> bool:
    start = haystack.find(phrase)
    while start != -1:
        end = start + len(phrase)
        left_ok = start == 0 or not haystack[start - 1].isalnum()
        right_ok = end == len(haystack) or not haystack[end].isalnum()
        if left_ok and right_ok:
            return True
        start = haystack.find(phrase, start + 1)
    return False


def match_sentence(prefixed_text: str, keyword_set: KeywordSet) -> list[str]:
    """Return the phrases of one bank found in a sentence, in bank order."""
    haystack = prefixed_text.lower()
    return [p for p in keyword_set.phrases if _phrase_occurs(haystack, p)]


def extract_candidates(
    sentences: Iterable[Sentence], bank: KeywordBank
) -> list[ExtractedCandidate]:
    """Match every sentence against every criterion in the bank.

    A sentence can yield several candidates (one per matching criterion);
    output order is sentence order, then bank order.
    """
    candidates: list[ExtractedCandidate] = []
    for sentence in sentences:
        for criterion, keyword_set in bank.items():
            matched = match_sentence(sentence.prefixed_text, keyword_set)
            if matched:
                candidates.append(
                    ExtractedCandidate(
                        trial_id=sentence.trial_id,
                        sentence_index=sentence.index,
                        criterion=criterion,
                        prefixed_text=sentence.prefixed_text,
                        matched_phrases=tuple(matched),
                    )
                )
    return candidates


@dataclass(frozen=True)
class ExtractionMetrics:
    """Trial-level capture quality of the keyword stage for one criterion.

    ``precision`` is None when nothing was captured (0/0 stays undefined
    rather than being coerced to a number).
    """

    criterion: CriterionId
    n_captured: int
    n_gold: int
    n_hit: int
    n_trials: int
    precision: float | None
    recall: float
    accuracy: float


def extraction_metrics(
    candidates: Iterable[ExtractedCandidate],
    gold_trials: Mapping[CriterionId, AbstractSet[str]],
    trials: Iterable[str],
) -> dict[CriterionId, ExtractionMetrics]:
    """Score captured-trial sets against gold-trial sets per criterion.

    A trial is captured for a criterion when any of its sentences produced
    a candidate. Only criteria present in ``gold_trials`` are scored; an
    empty gold set raises :class:`EmptyGoldError` because recall would be
    0/0. ``trials`` is the evaluation universe (true negatives live there).
    """
    universe = set(trials)
    captured: dict[CriterionId, set[str]] = {}
    for candidate in candidates:
        if candidate.trial_id in universe:
            captured.setdefault(candidate.criterion, set()).add(candidate.trial_id)

    results: dict[CriterionId, ExtractionMetrics] = {}
    for criterion, gold in gold_trials.items():
        gold = set(gold) & universe
        if not gold:
            raise EmptyGoldError(f"{criterion.value}: gold trial set is empty")
        got = captured.get(criterion, set())
        hits = len(got & gold)
        neither = len(universe) - len(got | gold)
        results[criterion] = ExtractionMetrics(
            criterion=criterion,
            n_captured=len(got),
            n_gold=len(gold),
            n_hit=hits,
            n_trials=len(universe),
            precision=hits / len(got) if got else None,
            recall=hits / len(gold),
            accuracy=(hits + neither) / len(universe) if universe else 0.0,
        )
    return results


def keyword_frequency(
    candidates: Iterable[ExtractedCandidate],
    sentence_gold: Mapping[tuple[str, int, CriterionId], int] | None = None,
) -> tuple[dict[str, int], dict[str, float]]:
    """Count phrase firings and, given gold labels, per-phrase precision.

    Returns ``(counts, precision)``. Precision for a phrase is the fraction
    of its labeled firings whose sentence is gold-positive for the matched
    criterion; firings without a gold entry are excluded, and phrases with
    no labeled firings are absent from the precision map.
    """
    counts: dict[str, int] = {}
    positive: dict[str, int] = {}
    labeled: dict[str, int] = {}
    for candidate in candidates:
        key = (candidate.trial_id, candidate.sentence_index, candidate.criterion)
        label = None if sentence_gold is None else sentence_gold.get(key)
        for phrase in candidate.matched_phrases:
            counts[phrase] = counts.get(phrase, 0) + 1
            if label is not None:
                labeled[phrase] = labeled.get(phrase, 0) + 1
                if label == 1:
                    positive[phrase] = positive.get(phrase, 0) + 1
    precision = {p: positive.get(p, 0) / n for p, n in labeled.items()}
    return counts, precision
