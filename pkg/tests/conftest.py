"""Shared fixtures plus the acceptance summary printed after a run."""

from __future__ import annotations

import pytest

ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines: list[str] = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if ACCEPTANCE_FILE not in nodeid or "::" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            status = "PASS" if outcome == "passed" else "FAIL"
            lines.append(f"ACCEPTANCE {name}: {status}")
    if lines:
        terminalreporter.write_line("")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def golden_trials() -> dict[str, str]:
    """Four reference trials whose extraction output is pinned byte-exact."""
    return {
        "NCT00005047": "At least 5 years since other prior systemic chemotherapy",
        "NCT00006011": (
            "Inclusion Criteria:\n- No prior radiotherapy for prior malignancy"
        ),
        "NCT00011986": (
            "Inclusion Criteria:\n- No other invasive malignancy within the past"
            " 5 years except nonmelanoma skin cancer"
        ),
        "NCT00216060": (
            "Exclusion Criteria:\n- No prior history of malignancy in the past 5"
            " years with the exception of basal cell and squamous cell carcinoma"
            " of the skin"
        ),
    }


@pytest.fixture
def golden_prefixed() -> dict[str, tuple[str, int]]:
    """Expected (prefixed_text, sentence_label) for the reference trials."""
    return {
        "NCT00005047": (
            "eligibility:At least 5 years since other prior systemic chemotherapy",
            0,
        ),
        "NCT00006011": ("inclusion:No prior radiotherapy for prior malignancy", 0),
        "NCT00011986": (
            "inclusion:No other invasive malignancy within the past 5 years"
            " except nonmelanoma skin cancer",
            1,
        ),
        "NCT00216060": (
            "exclusion:No prior history of malignancy in the past 5 years with"
            " the exception of basal cell and squamous cell carcinoma of the skin",
            1,
        ),
    }
