"""Wire-protocol request/response shapes.

Schema violations surface as HTTP 400; domain failures (single-class data,
unknown ids) are raised by the service layer with their own codes.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

MAX_SEQUENCE_LENGTH = 512


class Example(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    text: str
    label: Literal[0, 1]


class Hyperparams(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    epochs: int = Field(default=8, ge=1)
    learning_rate: float = Field(default=5e-5, gt=0)
    max_length: int = Field(default=128, ge=1, le=MAX_SEQUENCE_LENGTH)
    batch_size: int = Field(default=8, ge=1)
    seed: int = 42


class TrainRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_name: str | None = None
    examples: list[Example] = Field(min_length=1)
    hyperparams: Hyperparams = Field(default_factory=Hyperparams)


class PredictRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    texts: list[str]
