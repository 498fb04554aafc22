"""Study acquisition from the ClinicalTrials.gov v2 API and JSONL persistence.

Network access lives behind :func:`fetch_study` so everything else in the
pipeline works from :class:`TrialRecord` objects regardless of whether they
came from the API or a saved corpus file. The client asks only for the
modules it needs (identification, design, eligibility) to keep payloads
small, retries transient failures with exponential backoff, and never
retries a 404.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Mapping

import requests

from .errors import (
    CorpusParseError,
    MalformedIdError,
    MissingEligibilityError,
    NotFoundError,
    RateLimitedError,
    SchemaError,
    TransportError,
)

logger = logging.getLogger(__name__)

DEFAULT_API_BASE = "https://clinicaltrials.gov/api/v2/studies"
API_BASE_ENV = "TRIALSCREEN_API_BASE"

FETCH_FIELDS = ",".join(
    [
        "protocolSection.identificationModule",
        "protocolSection.designModule",
        "protocolSection.eligibilityModule",
    ]
)

_NCT_RE = re.compile(r"^NCT\d{8}$")
_VALID_SOURCES = ("api", "file")


def validate_nct_id(raw: str) -> str:
    """Return the canonical registry id: ``NCT`` plus exactly eight digits.

    Leading/trailing whitespace is forgiven and lowercase is uppercased;
    anything else raises :class:`MalformedIdError`.
    """
    nct_id = raw.strip().upper()
    if not _NCT_RE.match(nct_id):
        raise MalformedIdError(f"not a valid NCT id: {raw!r}")
    return nct_id


@dataclass(frozen=True)
class TrialRecord:
    """One study with the fields the pipeline consumes."""

    nct_id: str
    title: str
    phase: str
    eligibility_text: str
    source: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "nct_id", validate_nct_id(self.nct_id))
        if self.source not in _VALID_SOURCES:
            raise ValueError(f"source must be one of {_VALID_SOURCES}, got {self.source!r}")
        if not self.eligibility_text.strip():
            raise MissingEligibilityError(f"{self.nct_id}: eligibility text is empty")


def parse_study_document(document: Mapping[str, Any], source: str = "api") -> TrialRecord:
    """Build a :class:`TrialRecord` from a v2 API study document.

    Raises :class:`SchemaError` when the protocol section or identification
    module is missing, and :class:`MissingEligibilityError` when there is no
    non-blank ``eligibilityCriteria`` text. Phase falls back to ``"NA"``.
    """
    protocol = document.get("protocolSection")
    if not isinstance(protocol, Mapping):
        raise SchemaError("study document has no protocolSection")
    identification = protocol.get("identificationModule")
    if not isinstance(identification, Mapping) or "nctId" not in identification:
        raise SchemaError("study document has no identificationModule.nctId")
    nct_id = validate_nct_id(str(identification["nctId"]))

    eligibility = protocol.get("eligibilityModule")
    if not isinstance(eligibility, Mapping):
        raise MissingEligibilityError(f"{nct_id}: no eligibilityModule")
    criteria = eligibility.get("eligibilityCriteria")
    if not isinstance(criteria, str) or not criteria.strip():
        raise MissingEligibilityError(f"{nct_id}: no eligibility criteria text")

    title = str(identification.get("briefTitle", "") or "")
    design = protocol.get("designModule")
    phases: Any = None
    if isinstance(design, Mapping):
        phases = design.get("phases")
    if isinstance(phases, (list, tuple)) and phases:
        phase = "/".join(str(p) for p in phases)
    else:
        phase = "NA"

    return TrialRecord(
        nct_id=nct_id,
        title=title,
        phase=phase,
        eligibility_text=criteria,
        source=source,
    )


def fetch_study(
    nct_id: str,
    *,
    session: requests.Session | None = None,
    api_base: str | None = None,
    max_attempts: int = 3,
    base_delay: float = 0.5,
    timeout: float = 30.0,
    sleep: Callable[[float], None] = time.sleep,
) -> dict[str, Any]:
    """Fetch one study document, retrying transient failures.

    429 and 5xx responses and transport errors are retried up to
    ``max_attempts`` times with delays ``base_delay * 2**attempt``. A 404
    raises :class:`NotFoundError` immediately; 429 on the final attempt
    raises :class:`RateLimitedError`; anything else unrecoverable raises
    :class:`TransportError`.
    """
    nct_id = validate_nct_id(nct_id)
    base = api_base or os.environ.get(API_BASE_ENV) or DEFAULT_API_BASE
    url = f"{base.rstrip('/')}/{nct_id}"
    own_session = session is None
    sess = session or requests.Session()
    last_error: Exception | None = None
    try:
        for attempt in range(max_attempts):
            if attempt:
                sleep(base_delay * 2 ** (attempt - 1))
            try:
                response = sess.get(url, params={"fields": FETCH_FIELDS}, timeout=timeout)
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("fetch %s attempt %d failed: %s", nct_id, attempt + 1, exc)
                continue
            if response.status_code == 200:
                try:
                    document = response.json()
                except ValueError as exc:
                    raise SchemaError(f"{nct_id}: response is not JSON") from exc
                if not isinstance(document, dict):
                    raise SchemaError(f"{nct_id}: response is not a JSON object")
                return document
            if response.status_code == 404:
                raise NotFoundError(f"{nct_id}: study not found")
            if response.status_code == 429:
                last_error = RateLimitedError(f"{nct_id}: rate limited")
                logger.warning("fetch %s attempt %d rate limited", nct_id, attempt + 1)
                continue
            if 500 <= response.status_code < 600:
                last_error = TransportError(
                    f"{nct_id}: server error {response.status_code}"
                )
                logger.warning(
                    "fetch %s attempt %d got %d", nct_id, attempt + 1, response.status_code
                )
                continue
            raise TransportError(f"{nct_id}: unexpected status {response.status_code}")
    finally:
        if own_session:
            sess.close()
    if isinstance(last_error, RateLimitedError):
        raise last_error
    raise TransportError(f"{nct_id}: all {max_attempts} attempts failed") from last_error


def fetch_trial(nct_id: str, **kwargs: Any) -> TrialRecord:
    """Fetch and parse one study in a single call."""
    return parse_study_document(fetch_study(nct_id, **kwargs), source="api")


class CorpusStore:
    """In-memory corpus keyed by nct_id, preserving insertion order.

    Adding an id that already exists replaces the record (last write wins),
    which is what incremental re-fetches want.
    """

    def __init__(self, records: Iterable[TrialRecord] = ()):
        self._records: dict[str, TrialRecord] = {}
        for record in records:
            self.add(record)

    def add(self, record: TrialRecord) -> None:
        if record.nct_id in self._records:
            logger.warning("replacing existing record %s", record.nct_id)
        self._records[record.nct_id] = record

    def get(self, nct_id: str) -> TrialRecord | None:
        return self._records.get(validate_nct_id(nct_id))

    def __contains__(self, nct_id: str) -> bool:
        return nct_id in self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[TrialRecord]:
        return iter(self._records.values())

    def trial_ids(self) -> list[str]:
        return list(self._records)


_RECORD_FIELDS = ("nct_id", "title", "phase", "eligibility_text", "source")


def save_corpus(store: CorpusStore, path: str | Path) -> int:
    """Write the corpus as JSONL, one record per line. Returns the count."""
    with open(path, "w", encoding="utf-8") as handle:
        for record in store:
            payload = {name: getattr(record, name) for name in _RECORD_FIELDS}
            handle.write(json.dumps(payload, ensure_ascii=False) + "\n")
    return len(store)


def load_corpus(path: str | Path) -> CorpusStore:
    """Read a JSONL corpus back into a store.

    Blank lines are skipped. Any malformed or invalid line raises
    :class:`CorpusParseError` carrying its 1-based line number.
    """
    store = CorpusStore()
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
            except ValueError as exc:
                raise CorpusParseError(f"invalid JSON: {exc}", line_number) from exc
            if not isinstance(payload, dict):
                raise CorpusParseError("record is not an object", line_number)
            missing = [name for name in _RECORD_FIELDS if name not in payload]
            if missing:
                raise CorpusParseError(f"missing fields: {', '.join(missing)}", line_number)
            try:
                record = TrialRecord(**{name: payload[name] for name in _RECORD_FIELDS})
            except (TypeError, ValueError, MalformedIdError, MissingEligibilityError) as exc:
                raise CorpusParseError(str(exc), line_number) from exc
            store.add(record)
    return store
