"""Fixtures: in-thread uvicorn servers (stub and full) and a toy checkpoint."""

from __future__ import annotations

import os
import threading
import time

import pytest
import uvicorn

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

from trialscreen_bridge import build_toy_checkpoint, create_app

GOLDEN_SENTENCES = [
    ("eligibility:At least 5 years since other prior systemic chemotherapy", 0),
    ("inclusion:No prior radiotherapy for prior malignancy", 0),
    (
        "inclusion:No other invasive malignancy within the past 5 years"
        " except nonmelanoma skin cancer",
        1,
    ),
    (
        "exclusion:No prior history of malignancy in the past 5 years with"
        " the exception of basal cell and squamous cell carcinoma of the skin",
        1,
    ),
]

TOY_POSITIVE = [
    f"exclusion:known active {word} infection excludes enrollment"
    for word in (
        "viral", "bacterial", "fungal", "chronic", "systemic",
        "untreated", "severe", "acute", "resistant", "recurrent",
    )
]
TOY_NEGATIVE = [
    f"inclusion:screening for {word} markers is optional at baseline"
    for word in (
        "serum", "plasma", "urine", "tissue", "genetic",
        "hormone", "protein", "antibody", "imaging", "molecular",
    )
]


class ServerThread:
    def __init__(self, app):
        self.config = uvicorn.Config(
            app, host="127.0.0.1", port=0, log_level="warning", lifespan="off"
        )
        self.server = uvicorn.Server(self.config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def start(self) -> str:
        self.thread.start()
        deadline = time.time() + 30
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start within 30s")
            time.sleep(0.02)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def stop(self) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture(scope="session")
def toy_checkpoint(tmp_path_factory):
    texts = [text for text, _ in GOLDEN_SENTENCES]
    texts += TOY_POSITIVE + TOY_NEGATIVE
    return str(build_toy_checkpoint(tmp_path_factory.mktemp("toybert"), texts, seed=0))


@pytest.fixture(scope="session")
def stub_server(tmp_path_factory):
    app = create_app(stub=True, model_root=str(tmp_path_factory.mktemp("stub_models")))
    server = ServerThread(app)
    url = server.start()
    yield url
    server.stop()


@pytest.fixture(scope="session")
def full_server(tmp_path_factory, toy_checkpoint):
    app = create_app(
        stub=False,
        model_root=str(tmp_path_factory.mktemp("full_models")),
        default_model=toy_checkpoint,
    )
    server = ServerThread(app)
    url = server.start()
    yield url
    server.stop()
