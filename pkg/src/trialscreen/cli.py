"""Command-line entry points for the screening pipeline."""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from . import _kernels, agreement, ingest, pipeline
from .config import RunConfig, apply_overrides, config_hash, load_config
from .errors import ConfigError, TrialScreenError
from .evaluation import SentenceKey, evaluate_run, split_trials
from .keywords import CriterionId, default_keyword_bank, load_keyword_bank
from .model import load_model, save_model
from .parsing import write_sentences
from .remote import BackendSpec

logger = logging.getLogger("trialscreen.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 2


class StageFailure(Exception):
    """Wraps a pipeline error with the stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def _fail(stage: str, cause: Exception) -> StageFailure:
    return StageFailure(stage, cause)


def _run_block(config: RunConfig, command: str) -> dict[str, Any]:
    return {
        "command": command,
        "config_hash": config_hash(config),
        "train_seed": config.train.seed,
        "split_seed": config.split.seed,
        "backend": config.backend.to_dict(),
        "kernel": _kernels.backend_name(),
        "config": config.to_dict(),
    }


def _echo_run(run: dict[str, Any]) -> None:
    print(
        f"config_hash={run['config_hash']} "
        f"train_seed={run['train_seed']} split_seed={run['split_seed']}"
    )


def _write_json(payload: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, ensure_ascii=False, indent=2)
        handle.write("\n")


def _output_dir(args: argparse.Namespace, config: RunConfig | None = None) -> Path:
    if getattr(args, "output_dir", None):
        out = Path(args.output_dir)
    elif config is not None:
        out = Path(config.output_dir)
    else:
        out = Path("out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_effective_config(args: argparse.Namespace) -> RunConfig:
    try:
        config = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    except (ConfigError, OSError) as exc:
        raise _fail("config", exc)
    return apply_overrides(
        config,
        seed=getattr(args, "seed", None),
        output_dir=getattr(args, "output_dir", None),
        max_tokens=getattr(args, "max_tokens", None),
    )


def _load_bank(config: RunConfig):
    try:
        if config.keywords:
            return load_keyword_bank(config.keywords)
        return default_keyword_bank()
    except (ValueError, OSError) as exc:
        raise _fail("load-keywords", exc)


def _load_store(config: RunConfig) -> ingest.CorpusStore:
    try:
        return ingest.load_corpus(config.corpus)
    except (TrialScreenError, OSError) as exc:
        raise _fail("load-corpus", exc)


def _load_gold(config: RunConfig) -> dict[SentenceKey, int]:
    if not config.labels:
        raise _fail("load-labels", ConfigError("config has no labels file"))
    try:
        return pipeline.gold_map(agreement.read_gold_file(config.labels))
    except (TrialScreenError, OSError, ValueError, KeyError) as exc:
        raise _fail("load-labels", exc)


def cmd_fetch(args: argparse.Namespace) -> int:
    ids: list[str] = list(args.nct_ids)
    if args.ids_file:
        try:
            with open(args.ids_file, "r", encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if line and not line.startswith("#"):
                        ids.append(line)
        except OSError as exc:
            raise _fail("read-ids", exc)
    if not ids:
        raise _fail("read-ids", ConfigError("no trial ids given"))

    config = apply_overrides(RunConfig(), output_dir=args.output_dir)
    run = _run_block(config, "fetch")
    out = _output_dir(args, config)

    def fetch_one(raw_id: str) -> tuple[str, ingest.TrialRecord | None, str | None]:
        try:
            record = ingest.fetch_trial(raw_id)
            return raw_id, record, None
        except TrialScreenError as exc:
            return raw_id, None, str(exc)

    results: list[tuple[str, ingest.TrialRecord | None, str | None]]
    if args.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(fetch_one, ids))
    else:
        results = [fetch_one(raw_id) for raw_id in ids]

    store = ingest.CorpusStore()
    failures: list[dict[str, str]] = []
    skipped_phase: list[str] = []
    for raw_id, record, error in results:
        if record is None:
            failures.append({"nct_id": raw_id, "error": error or "unknown"})
            logger.warning("fetch failed for %s: %s", raw_id, error)
            continue
        if args.phase and args.phase.lower() not in record.phase.lower():
            skipped_phase.append(record.nct_id)
            logger.info("skipping %s: phase %s", record.nct_id, record.phase)
            continue
        store.add(record)

    corpus_path = out / "corpus.jsonl"
    try:
        ingest.save_corpus(store, corpus_path)
    except OSError as exc:
        raise _fail("write-corpus", exc)
    _write_json(
        {
            "run": run,
            "requested": len(ids),
            "fetched": len(store),
            "skipped_phase": skipped_phase,
            "failures": failures,
        },
        out / "fetch_manifest.json",
    )
    _echo_run(run)
    logger.info("fetched %d/%d trials into %s", len(store), len(ids), corpus_path)
    if failures and len(store) == 0 and not skipped_phase:
        raise _fail("fetch", TrialScreenError("every fetch failed"))
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)
    if args.corpus:
        config = dataclasses.replace(config, corpus=args.corpus)
    if args.keywords:
        config = dataclasses.replace(config, keywords=args.keywords)
    run = _run_block(config, "extract")
    out = _output_dir(args, config)
    store = _load_store(config)
    bank = _load_bank(config)
    try:
        sentences, candidates = pipeline.extract_corpus(store, bank, config.max_tokens)
    except TrialScreenError as exc:
        raise _fail("extract", exc)
    try:
        write_sentences(sentences, out / "sentences.jsonl")
        pipeline.write_candidates(candidates, out / "candidates.jsonl")
    except OSError as exc:
        raise _fail("write-output", exc)
    _write_json(
        {"run": run, "n_trials": len(store), "n_sentences": len(sentences),
         "n_candidates": len(candidates)},
        out / "extract_manifest.json",
    )
    _echo_run(run)
    logger.info(
        "extracted %d sentences, %d candidates from %d trials",
        len(sentences), len(candidates), len(store),
    )
    return EXIT_OK


def _read_indexed_labels(path: str, stage: str) -> dict[SentenceKey, int]:
    try:
        return agreement.labels_by_key(agreement.read_label_file(path))
    except (TrialScreenError, OSError, ValueError, KeyError) as exc:
        raise _fail(stage, exc)


def cmd_agreement(args: argparse.Namespace) -> int:
    config = apply_overrides(RunConfig(), output_dir=args.output_dir)
    run = _run_block(config, "agreement")
    out = _output_dir(args, config)
    labels_a = _read_indexed_labels(args.labels_a, "read-labels")
    labels_b = _read_indexed_labels(args.labels_b, "read-labels")
    try:
        report = agreement.agreement_report(labels_a, labels_b)
    except TrialScreenError as exc:
        raise _fail("agreement", exc)
    payload = {"run": run, "criteria": report}
    _write_json(payload, out / "agreement.json")
    print(json.dumps(payload, ensure_ascii=False, indent=2))
    return EXIT_OK


def _read_resolutions(path: str) -> dict[SentenceKey, int]:
    resolutions: dict[SentenceKey, int] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            key = (row["trial_id"], int(row["sentence_index"]), CriterionId(row["criterion"]))
            resolutions[key] = int(row["label"])
    return resolutions


def cmd_adjudicate(args: argparse.Namespace) -> int:
    config = apply_overrides(RunConfig(), output_dir=args.output_dir)
    run = _run_block(config, "adjudicate")
    out = _output_dir(args, config)
    labels_a = _read_indexed_labels(args.labels_a, "read-labels")
    labels_b = _read_indexed_labels(args.labels_b, "read-labels")
    resolutions: dict[SentenceKey, int] = {}
    if args.resolutions:
        try:
            resolutions = _read_resolutions(args.resolutions)
        except (OSError, ValueError, KeyError) as exc:
            raise _fail("read-resolutions", exc)
    try:
        gold = agreement.adjudicate(labels_a, labels_b, resolutions)
    except TrialScreenError as exc:
        raise _fail("adjudicate", exc)
    trial_gold = agreement.derive_trial_gold(gold)
    try:
        agreement.write_gold_file(gold, out / "gold.csv")
        agreement.write_trial_gold_file(trial_gold, out / "trial_gold.csv")
    except OSError as exc:
        raise _fail("write-output", exc)
    _write_json(
        {"run": run, "n_gold": len(gold), "n_trial_gold": len(trial_gold),
         "n_adjudicated": sum(1 for g in gold if g.provenance == "adjudicated")},
        out / "adjudicate_manifest.json",
    )
    _echo_run(run)
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)
    if config.split.mode != "holdout":
        raise _fail("config", ConfigError("train requires split.mode == holdout"))
    run = _run_block(config, "train")
    out = _output_dir(args, config)
    store = _load_store(config)
    bank = _load_bank(config)
    gold = _load_gold(config)
    try:
        _, candidates = pipeline.extract_corpus(store, bank, config.max_tokens)
        plan = split_trials(
            store.trial_ids(), ratio=config.split.ratio, seed=config.split.seed
        )
        train_candidates = [
            c for c in candidates
            if c.trial_id in set(plan.train_trials)
            and (c.trial_id, c.sentence_index, c.criterion) in gold
        ]
        examples = pipeline.training_examples(train_candidates, gold)
        handles, skipped = pipeline.train_criteria(
            examples, config.train, config.backend, config.remote_hyperparams
        )
    except TrialScreenError as exc:
        raise _fail("train", exc)

    models_dir = out / "models"
    models_dir.mkdir(parents=True, exist_ok=True)
    entries: dict[str, Any] = {}
    for criterion, handle in handles.items():
        if isinstance(handle, str):
            entries[criterion.value] = {"model_id": handle}
        else:
            path = models_dir / f"{criterion.value}.json"
            try:
                save_model(handle, path)
            except OSError as exc:
                raise _fail("write-model", exc)
            entries[criterion.value] = {"path": f"models/{criterion.value}.json"}
    manifest = {
        "run": run,
        "split": {
            "ratio": config.split.ratio,
            "seed": config.split.seed,
            "train_trials": list(plan.train_trials),
            "test_trials": list(plan.test_trials),
        },
        "models": entries,
        "skipped_criteria": [c.value for c in skipped],
        "n_examples": {c.value: len(v) for c, v in sorted(
            examples.items(), key=lambda kv: kv[0].value)},
    }
    _write_json(manifest, out / "manifest.json")
    _echo_run(run)
    for criterion in skipped:
        logger.warning("criterion %s skipped (single-class labels)", criterion.value)
    logger.info("trained %d models into %s", len(entries), models_dir)
    return EXIT_PARTIAL if skipped else EXIT_OK


def _load_manifest(models_dir: str) -> dict:
    path = Path(models_dir) / "manifest.json"
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, ValueError) as exc:
        raise _fail("load-model", exc)


def _load_handles(
    manifest: dict, models_dir: str, backend: BackendSpec
) -> dict[CriterionId, pipeline.BackendHandle]:
    handles: dict[CriterionId, pipeline.BackendHandle] = {}
    for name, entry in manifest.get("models", {}).items():
        criterion = CriterionId(name)
        if "model_id" in entry:
            handles[criterion] = entry["model_id"]
        else:
            try:
                handles[criterion] = load_model(Path(models_dir) / entry["path"])
            except (OSError, ValueError) as exc:
                raise _fail("load-model", exc)
    if not handles:
        raise _fail("load-model", ConfigError("manifest lists no models"))
    return handles


def cmd_predict(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)
    run = _run_block(config, "predict")
    out = _output_dir(args, config)
    store = _load_store(config)
    bank = _load_bank(config)
    manifest = _load_manifest(args.models)
    handles = _load_handles(manifest, args.models, config.backend)
    try:
        _, candidates = pipeline.extract_corpus(store, bank, config.max_tokens)
        predictions = []
        unhandled = sorted(
            {c.criterion.value for c in candidates if c.criterion not in handles}
        )
        for criterion, handle in handles.items():
            subset = [c for c in candidates if c.criterion == criterion]
            if subset:
                predictions.extend(
                    pipeline.predict_backend(config.backend, handle, subset)
                )
        predictions = pipeline.sort_predictions(predictions)
    except TrialScreenError as exc:
        raise _fail("predict", exc)
    try:
        pipeline.write_predictions(predictions, out / "predictions.jsonl")
    except OSError as exc:
        raise _fail("write-output", exc)
    _write_json(
        {"run": run, "n_predictions": len(predictions),
         "criteria_without_model": unhandled},
        out / "predict_manifest.json",
    )
    _echo_run(run)
    if unhandled:
        logger.warning("no model for criteria: %s", ", ".join(unhandled))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)
    if config.split.mode != "holdout":
        raise _fail("config", ConfigError("eval requires split.mode == holdout"))
    run = _run_block(config, "eval")
    out = _output_dir(args, config)
    store = _load_store(config)
    bank = _load_bank(config)
    gold = _load_gold(config)
    manifest = _load_manifest(args.models)
    handles = _load_handles(manifest, args.models, config.backend)
    try:
        _, candidates = pipeline.extract_corpus(store, bank, config.max_tokens)
        plan = split_trials(
            store.trial_ids(), ratio=config.split.ratio, seed=config.split.seed
        )
        test_trials = set(plan.test_trials)
        test_candidates = [
            c for c in candidates
            if c.trial_id in test_trials
            and (c.trial_id, c.sentence_index, c.criterion) in gold
            and c.criterion in handles
        ]
        predictions = []
        for criterion, handle in handles.items():
            subset = [c for c in test_candidates if c.criterion == criterion]
            if subset:
                predictions.extend(
                    pipeline.predict_backend(config.backend, handle, subset)
                )
        predictions = pipeline.sort_predictions(predictions)
        pred_map = pipeline.predictions_map(predictions)
        report = evaluate_run(pred_map, {k: gold[k] for k in pred_map})
    except TrialScreenError as exc:
        raise _fail("evaluate", exc)
    payload = {
        "run": run,
        "split": {"ratio": config.split.ratio, "seed": config.split.seed,
                  "n_test_trials": len(plan.test_trials)},
        "n_predictions": len(predictions),
        "evaluation": report,
    }
    _write_json(payload, out / "report.json")
    try:
        pipeline.write_predictions(predictions, out / "predictions.jsonl")
    except OSError as exc:
        raise _fail("write-output", exc)
    _echo_run(run)
    return EXIT_OK


def cmd_crossval(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)
    if config.split.mode != "kfold":
        raise _fail("config", ConfigError("crossval requires split.mode == kfold"))
    run = _run_block(config, "crossval")
    out = _output_dir(args, config)
    store = _load_store(config)
    bank = _load_bank(config)
    gold = _load_gold(config)
    try:
        result = pipeline.run_crossval(
            store,
            gold,
            bank,
            k=config.split.k,
            seed=config.split.seed,
            config=config.train,
            spec=config.backend,
            hyperparams=config.remote_hyperparams,
            max_tokens=config.max_tokens,
        )
    except TrialScreenError as exc:
        raise _fail("crossval", exc)
    payload = {"run": run, **result.report}
    _write_json(payload, out / "crossval.json")
    folds_dir = out / "folds"
    for fold_report in result.report["folds"]:
        _write_json(
            {"run": run, **fold_report}, folds_dir / f"fold_{fold_report['fold']}.json"
        )
    try:
        pipeline.write_predictions(result.pooled_predictions, out / "predictions.jsonl")
    except OSError as exc:
        raise _fail("write-output", exc)
    _echo_run(run)
    any_skips = any(f["skipped_criteria"] for f in result.report["folds"])
    if any_skips:
        logger.warning("some folds skipped criteria; see crossval.json")
    return EXIT_PARTIAL if any_skips else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trialscreen",
        description="Screen cancer-trial eligibility criteria for exclusion rules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download trials into a JSONL corpus")
    p.add_argument("nct_ids", nargs="*", help="registry ids (NCT + 8 digits)")
    p.add_argument("--ids-file", help="file with one id per line")
    p.add_argument("--phase", help="keep only trials whose phase contains this")
    p.add_argument("--jobs", type=int, default=1, help="parallel fetch workers")
    p.add_argument("--output-dir", help="where to write corpus.jsonl")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("extract", help="parse sentences and match keywords")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--corpus", help="corpus JSONL (overrides config)")
    p.add_argument("--keywords", help="keyword bank JSON (overrides config)")
    p.add_argument("--max-tokens", type=int, help="sentence token budget")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("agreement", help="inter-annotator agreement report")
    p.add_argument("labels_a", help="first annotator CSV")
    p.add_argument("labels_b", help="second annotator CSV")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("adjudicate", help="merge annotators into gold labels")
    p.add_argument("labels_a")
    p.add_argument("labels_b")
    p.add_argument("--resolutions", help="adjudicator CSV for disagreements")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_adjudicate)

    p = sub.add_parser("train", help="train per-criterion models on the train split")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override train and split seeds")
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score all corpus candidates with saved models")
    p.add_argument("--config", required=True)
    p.add_argument("--models", required=True, help="directory holding manifest.json")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="evaluate saved models on the held-out split")
    p.add_argument("--config", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("crossval", help="k-fold cross-validation over trials")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_crossval)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageFailure as exc:
        print(f"error [{exc.stage}]: {exc.cause}", file=sys.stderr)
        return EXIT_ERROR
    except TrialScreenError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
