import json
import random

import pytest

from trialscreen.errors import (
    CorpusParseError,
    MalformedIdError,
    MissingEligibilityError,
    NotFoundError,
    RateLimitedError,
    SchemaError,
    TransportError,
)
from trialscreen.ingest import (
    CorpusStore,
    TrialRecord,
    fetch_study,
    fetch_trial,
    load_corpus,
    parse_study_document,
    save_corpus,
    validate_nct_id,
)


def study_doc(nct_id="NCT00048997", criteria="No other malignancy within the past 3 years", phases=("PHASE3",)):
    return {
        "protocolSection": {
            "identificationModule": {"nctId": nct_id, "briefTitle": "A study"},
            "designModule": {"phases": list(phases)},
            "eligibilityModule": {"eligibilityCriteria": criteria},
        }
    }


class TestValidateId:
    def test_canonical_passes(self):
        assert validate_nct_id("NCT00005047") == "NCT00005047"

    def test_lowercase_and_whitespace_normalized(self):
        assert validate_nct_id(" nct00005047 ") == "NCT00005047"

    @pytest.mark.parametrize("bad", ["NCT123", "NCT123456789", "00005047", "NCTabcdefgh", ""])
    def test_rejects_malformed(self, bad):
        with pytest.raises(MalformedIdError):
            validate_nct_id(bad)


class TestParseStudyDocument:
    def test_happy_path(self):
        record = parse_study_document(study_doc())
        assert record.nct_id == "NCT00048997"
        assert record.phase == "PHASE3"
        assert record.source == "api"
        assert "malignancy" in record.eligibility_text

    def test_missing_protocol_section(self):
        with pytest.raises(SchemaError):
            parse_study_document({"studies": []})

    def test_missing_eligibility_module(self):
        doc = study_doc()
        del doc["protocolSection"]["eligibilityModule"]
        with pytest.raises(MissingEligibilityError):
            parse_study_document(doc)

    def test_blank_criteria_text(self):
        with pytest.raises(MissingEligibilityError):
            parse_study_document(study_doc(criteria="   \n "))

    def test_phase_fallback(self):
        doc = study_doc()
        del doc["protocolSection"]["designModule"]
        assert parse_study_document(doc).phase == "NA"

    def test_multi_phase_joined(self):
        record = parse_study_document(study_doc(phases=("PHASE1", "PHASE2")))
        assert record.phase == "PHASE1/PHASE2"


class FakeResponse:
    def __init__(self, status_code, payload=None):
        self.status_code = status_code
        self._payload = payload

    def json(self):
        if self._payload is None:
            raise ValueError("no body")
        return self._payload


class FakeSession:
    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = []

    def get(self, url, params=None, timeout=None):
        self.calls.append((url, params))
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


class TestFetchStudy:
    def test_success(self):
        session = FakeSession([FakeResponse(200, study_doc())])
        doc = fetch_study("NCT00048997", session=session, sleep=lambda _: None)
        assert doc["protocolSection"]["identificationModule"]["nctId"] == "NCT00048997"
        url, params = session.calls[0]
        assert url.endswith("/NCT00048997")
        assert "eligibilityModule" in params["fields"]

    def test_404_is_immediate(self):
        session = FakeSession([FakeResponse(404)])
        with pytest.raises(NotFoundError):
            fetch_study("NCT00000404", session=session, sleep=lambda _: None)
        assert len(session.calls) == 1

    def test_retry_then_success(self):
        session = FakeSession([FakeResponse(500), FakeResponse(200, study_doc())])
        delays = []
        doc = fetch_study("NCT00048997", session=session, sleep=delays.append)
        assert doc and delays == [0.5]

    def test_persistent_rate_limit(self):
        session = FakeSession([FakeResponse(429)] * 3)
        delays = []
        with pytest.raises(RateLimitedError):
            fetch_study("NCT00048997", session=session, sleep=delays.append)
        assert delays == [0.5, 1.0]
        assert len(session.calls) == 3

    def test_transport_failure_after_retries(self):
        import requests

        session = FakeSession([requests.ConnectionError("boom")] * 3)
        with pytest.raises(TransportError):
            fetch_study("NCT00048997", session=session, sleep=lambda _: None)

    def test_malformed_id_rejected_before_network(self):
        session = FakeSession([])
        with pytest.raises(MalformedIdError):
            fetch_study("bogus", session=session)
        assert session.calls == []

    def test_fetch_trial_parses(self):
        session = FakeSession([FakeResponse(200, study_doc())])
        record = fetch_trial("NCT00048997", session=session, sleep=lambda _: None)
        assert isinstance(record, TrialRecord)
        assert record.source == "api"

    def test_env_base_override(self, monkeypatch):
        monkeypatch.setenv("TRIALSCREEN_API_BASE", "http://localhost:1/api/v2/studies")
        session = FakeSession([FakeResponse(200, study_doc())])
        fetch_study("NCT00048997", session=session, sleep=lambda _: None)
        assert session.calls[0][0] == "http://localhost:1/api/v2/studies/NCT00048997"


def make_record(i, text="No prior malignancy within 5 years"):
    return TrialRecord(
        nct_id=f"NCT{10000000 + i:08d}",
        title=f"Study {i}",
        phase="PHASE2",
        eligibility_text=text,
        source="file",
    )


class TestCorpusStore:
    def test_roundtrip(self, tmp_path):
        store = CorpusStore([make_record(i) for i in range(3)])
        path = tmp_path / "corpus.jsonl"
        assert save_corpus(store, path) == 3
        loaded = load_corpus(path)
        assert list(loaded) == list(store)

    def test_replace_warns_and_keeps_last(self, caplog):
        store = CorpusStore()
        store.add(make_record(1, text="first text"))
        with caplog.at_level("WARNING"):
            store.add(make_record(1, text="second text"))
        assert len(store) == 1
        assert store.get("NCT10000001").eligibility_text == "second text"
        assert any("replacing" in message for message in caplog.messages)

    def test_empty_store_roundtrip(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        save_corpus(CorpusStore(), path)
        assert len(load_corpus(path)) == 0

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        good = json.dumps(
            {
                "nct_id": "NCT10000001",
                "title": "t",
                "phase": "NA",
                "eligibility_text": "No prior cancer",
                "source": "file",
            }
        )
        path.write_text(good + "\n{broken\n", encoding="utf-8")
        with pytest.raises(CorpusParseError) as excinfo:
            load_corpus(path)
        assert excinfo.value.line_number == 2

    def test_missing_field_reports_line_number(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps({"nct_id": "NCT10000001"}) + "\n", encoding="utf-8")
        with pytest.raises(CorpusParseError) as excinfo:
            load_corpus(path)
        assert excinfo.value.line_number == 1
        assert "missing fields" in str(excinfo.value)

    def test_invalid_record_reports_line_number(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        payload = {
            "nct_id": "NOT_AN_ID",
            "title": "t",
            "phase": "NA",
            "eligibility_text": "text",
            "source": "file",
        }
        path.write_text(json.dumps(payload) + "\n", encoding="utf-8")
        with pytest.raises(CorpusParseError):
            load_corpus(path)

    def test_blank_lines_skipped(self, tmp_path):
        store = CorpusStore([make_record(7)])
        path = tmp_path / "corpus.jsonl"
        save_corpus(store, path)
        path.write_text(path.read_text(encoding="utf-8") + "\n\n", encoding="utf-8")
        assert len(load_corpus(path)) == 1

    def test_random_roundtrip_identity(self, tmp_path):
        rng = random.Random(404)
        words = ["malignancy", "therapy", "hiv", "hepatitis", "allowed", "excluded"]
        for case in range(20):
            records = [
                make_record(
                    rng.randint(0, 10_000_000),
                    text="\n".join(
                        " ".join(rng.choice(words) for _ in range(rng.randint(1, 8)))
                        for _ in range(rng.randint(1, 4))
                    ),
                )
                for _ in range(rng.randint(1, 10))
            ]
            store = CorpusStore(records)
            path = tmp_path / f"corpus_{case}.jsonl"
            save_corpus(store, path)
            assert list(load_corpus(path)) == list(store)

    def test_record_requires_eligibility_text(self):
        with pytest.raises(MissingEligibilityError):
            make_record(1, text="   ")
