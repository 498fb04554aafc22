"""Run configuration: file loading, flag overrides, and hashing.

Precedence is flag > config file > built-in default. The effective config
(after overrides) is what gets hashed; the hash is embedded in every
artifact a command writes so outputs can be traced to the exact settings
that produced them.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .model import TrainConfig
from .remote import BackendSpec, RemoteHyperparams


@dataclass(frozen=True)
class SplitSettings:
    mode: str = "holdout"
    ratio: float = 0.7
    k: int = 5
    seed: int = 42

    def __post_init__(self) -> None:
        if self.mode not in ("holdout", "kfold"):
            raise ConfigError(f"split.mode must be holdout or kfold, got {self.mode!r}")
        if not 0.0 < self.ratio < 1.0:
            raise ConfigError(f"split.ratio must be in (0, 1), got {self.ratio}")
        if self.k < 2:
            raise ConfigError(f"split.k must be >= 2, got {self.k}")


@dataclass(frozen=True)
class RunConfig:
    corpus: str = "corpus.jsonl"
    labels: str | None = None
    keywords: str | None = None
    output_dir: str = "out"
    max_tokens: int = 400
    backend: BackendSpec = field(default_factory=BackendSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    remote_hyperparams: RemoteHyperparams = field(default_factory=RemoteHyperparams)
    split: SplitSettings = field(default_factory=SplitSettings)

    def to_dict(self) -> dict[str, Any]:
        return {
            "corpus": self.corpus,
            "labels": self.labels,
            "keywords": self.keywords,
            "output_dir": self.output_dir,
            "max_tokens": self.max_tokens,
            "backend": self.backend.to_dict(),
            "train": self.train.to_dict(),
            "remote_hyperparams": self.remote_hyperparams.to_dict(),
            "split": {
                "mode": self.split.mode,
                "ratio": self.split.ratio,
                "k": self.split.k,
                "seed": self.split.seed,
            },
        }


def config_hash(config: RunConfig) -> str:
    """sha256 over the canonical JSON form of the effective config."""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _build_section(cls: type, payload: Mapping[str, Any], section: str) -> Any:
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(payload) - names
    if unknown:
        raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")
    try:
        return cls(**payload)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section} settings: {exc}") from exc


_TOP_LEVEL_KEYS = {
    "corpus",
    "labels",
    "keywords",
    "output_dir",
    "max_tokens",
    "backend",
    "train",
    "remote_hyperparams",
    "split",
}


def load_config(path: str | Path) -> RunConfig:
    """Load a JSON config file; unknown keys are errors, not surprises."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except ValueError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(payload) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    kwargs: dict[str, Any] = {}
    for name in ("corpus", "labels", "keywords", "output_dir", "max_tokens"):
        if name in payload:
            kwargs[name] = payload[name]
    if "backend" in payload:
        kwargs["backend"] = _build_section(BackendSpec, payload["backend"], "backend")
    if "train" in payload:
        kwargs["train"] = _build_section(TrainConfig, payload["train"], "train")
    if "remote_hyperparams" in payload:
        kwargs["remote_hyperparams"] = _build_section(
            RemoteHyperparams, payload["remote_hyperparams"], "remote_hyperparams"
        )
    if "split" in payload:
        kwargs["split"] = _build_section(SplitSettings, payload["split"], "split")
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def apply_overrides(
    config: RunConfig,
    *,
    seed: int | None = None,
    output_dir: str | None = None,
    max_tokens: int | None = None,
) -> RunConfig:
    """Apply CLI flag overrides; a seed flag overrides both train and split."""
    if seed is not None:
        config = dataclasses.replace(
            config,
            train=dataclasses.replace(config.train, seed=seed),
            split=dataclasses.replace(config.split, seed=seed),
        )
    if output_dir is not None:
        config = dataclasses.replace(config, output_dir=output_dir)
    if max_tokens is not None:
        config = dataclasses.replace(config, max_tokens=max_tokens)
    return config
