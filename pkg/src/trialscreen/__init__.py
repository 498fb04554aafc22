"""Screening of cancer clinical-trial eligibility criteria.

The pipeline fetches trials from the ClinicalTrials.gov v2 API, splits
their eligibility text into prefixed sentences, pulls candidate sentences
per exclusion criterion with keyword banks, supports dual annotation with
agreement statistics and adjudication, and trains a deterministic TF-IDF
logistic-regression baseline per criterion (or delegates to a remote
fine-tuning service). Evaluation reports sentence-level and trial-level
metrics, with trials counted positive when any of their sentences is.
"""

from .agreement import (
    GoldLabel,
    SentenceLabel,
    TrialGold,
    adjudicate,
    cohen_kappa,
    derive_trial_gold,
    percent_agreement,
)
from .errors import TrialScreenError
from .evaluation import (
    ConfusionMatrix,
    FoldPlan,
    MetricSet,
    SplitPlan,
    confusion,
    evaluate_run,
    kfold_trials,
    metrics,
    micro_metrics,
    split_trials,
    trial_rollup,
)
from .ingest import CorpusStore, TrialRecord, fetch_study, fetch_trial, load_corpus, save_corpus, validate_nct_id
from .keywords import (
    CriterionId,
    ExtractedCandidate,
    KeywordSet,
    default_keyword_bank,
    extract_candidates,
    extraction_metrics,
    load_keyword_bank,
    match_sentence,
)
from .model import (
    BaselineModel,
    Prediction,
    TrainConfig,
    TrainingExample,
    fit_features,
    load_model,
    predict_baseline,
    save_model,
    tokenize,
    train_baseline,
    vectorize,
)
from .parsing import (
    CriteriaSection,
    SectionKind,
    Sentence,
    clean_text,
    guard_length,
    segment_sections,
    sentences_for_trial,
    split_sentences,
)
from .remote import BackendSpec, RemoteHyperparams, check_health, predict_remote, train_remote

__version__ = "0.1.0"

__all__ = [
    "BackendSpec",
    "BaselineModel",
    "ConfusionMatrix",
    "CorpusStore",
    "CriteriaSection",
    "CriterionId",
    "ExtractedCandidate",
    "FoldPlan",
    "GoldLabel",
    "KeywordSet",
    "MetricSet",
    "Prediction",
    "RemoteHyperparams",
    "SectionKind",
    "Sentence",
    "SentenceLabel",
    "SplitPlan",
    "TrainConfig",
    "TrainingExample",
    "TrialGold",
    "TrialRecord",
    "TrialScreenError",
    "adjudicate",
    "check_health",
    "clean_text",
    "cohen_kappa",
    "confusion",
    "default_keyword_bank",
    "derive_trial_gold",
    "evaluate_run",
    "extract_candidates",
    "extraction_metrics",
    "fetch_study",
    "fetch_trial",
    "fit_features",
    "guard_length",
    "kfold_trials",
    "load_corpus",
    "load_keyword_bank",
    "load_model",
    "match_sentence",
    "metrics",
    "micro_metrics",
    "percent_agreement",
    "predict_baseline",
    "predict_remote",
    "save_corpus",
    "save_model",
    "segment_sections",
    "sentences_for_trial",
    "split_sentences",
    "split_trials",
    "tokenize",
    "train_baseline",
    "train_remote",
    "trial_rollup",
    "validate_nct_id",
    "vectorize",
]
