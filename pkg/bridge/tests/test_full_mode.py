"""Full mode: real fine-tuning against the toy checkpoint.

Budgets are asserted in-test: these must stay fast enough for a plain CPU.
"""

import time

import requests

from conftest import GOLDEN_SENTENCES, TOY_NEGATIVE, TOY_POSITIVE


def post(url, path, payload, timeout=240):
    return requests.post(f"{url}{path}", json=payload, timeout=timeout)


def toy_training_payload(epochs=30, seed=11):
    examples = [{"text": t, "label": 1} for t in TOY_POSITIVE]
    examples += [{"text": t, "label": 0} for t in TOY_NEGATIVE]
    return {
        "examples": examples,
        "hyperparams": {
            "epochs": epochs,
            "learning_rate": 5e-4,
            "max_length": 64,
            "batch_size": 8,
            "seed": seed,
        },
    }


def test_training_reaches_toy_accuracy(full_server):
    t0 = time.perf_counter()
    payload = toy_training_payload()
    response = post(full_server, "/v1/train", payload)
    assert response.status_code == 200, response.text
    model_id = response.json()["model_id"]

    texts = [example["text"] for example in payload["examples"]]
    wanted = [example["label"] for example in payload["examples"]]
    response = post(full_server, "/v1/predict", {"model_id": model_id, "texts": texts})
    assert response.status_code == 200, response.text
    predictions = response.json()["predictions"]
    assert len(predictions) == len(texts)
    for item in predictions:
        assert item["label"] in (0, 1)
        assert 0.0 <= item["score"] <= 1.0
        assert item["label"] == (1 if item["score"] >= 0.5 else 0)
    correct = sum(p["label"] == w for p, w in zip(predictions, wanted))
    accuracy = correct / len(wanted)
    assert accuracy >= 0.9, f"training accuracy {accuracy:.2f}"
    assert time.perf_counter() - t0 < 120.0


def test_golden_sentences_memorized(full_server):
    t0 = time.perf_counter()
    payload = {
        "examples": [{"text": text, "label": label} for text, label in GOLDEN_SENTENCES],
        "hyperparams": {
            "epochs": 40,
            "learning_rate": 5e-4,
            "max_length": 64,
            "batch_size": 4,
            "seed": 42,
        },
    }
    model_id = post(full_server, "/v1/train", payload).json()["model_id"]
    texts = [text for text, _ in GOLDEN_SENTENCES]
    predictions = post(
        full_server, "/v1/predict", {"model_id": model_id, "texts": texts}
    ).json()["predictions"]
    assert [p["label"] for p in predictions] == [label for _, label in GOLDEN_SENTENCES]
    assert time.perf_counter() - t0 < 120.0


def test_train_is_idempotent_and_predict_deterministic(full_server):
    payload = toy_training_payload(epochs=2, seed=5)
    first = post(full_server, "/v1/train", payload).json()["model_id"]
    t0 = time.perf_counter()
    second = post(full_server, "/v1/train", payload).json()["model_id"]
    dedup_time = time.perf_counter() - t0
    assert first == second
    assert dedup_time < 5.0  # content hash hit, no retraining

    texts = [example["text"] for example in payload["examples"]][:5]
    a = post(full_server, "/v1/predict", {"model_id": first, "texts": texts}).json()
    b = post(full_server, "/v1/predict", {"model_id": first, "texts": texts}).json()
    assert a == b


def test_unknown_checkpoint_is_404(full_server):
    payload = toy_training_payload(epochs=1)
    payload["model_name"] = "does/not-exist-anywhere"
    response = post(full_server, "/v1/train", payload)
    assert response.status_code == 404, response.text
    assert response.json()["error"]["code"] == "unknown_checkpoint"


def test_health_reports_full_mode(full_server):
    body = requests.get(f"{full_server}/health", timeout=10).json()
    assert body["status"] == "ok"
    assert body["mode"] == "full"
