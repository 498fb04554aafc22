"""Eligibility-text normalization, sectioning, and sentence splitting.

The registry serves eligibility criteria as a single free-text blob. This
module turns that blob into an ordered list of :class:`Sentence` objects,
each tagged with the section it came from, so downstream keyword matching
and classification work on stable, reproducible units.

The section and sentence rules are deliberately conservative: headers are
only the literal lines "inclusion criteria" / "exclusion criteria"
(case-insensitive, optional trailing colon), and anything before the first
header, or a blob with no headers at all, counts as generic eligibility
text. Structured prose blocks like "DISEASE CHARACTERISTICS:" stay inside
whatever section they appear in.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator


class SectionKind(str, enum.Enum):
    INCLUSION = "inclusion"
    EXCLUSION = "exclusion"
    ELIGIBILITY = "eligibility"


@dataclass(frozen=True)
class CriteriaSection:
    """A contiguous slice of the raw eligibility text.

    ``char_span`` is the half-open [start, end) offset range into the *raw*
    text the section was cut from (header lines are not part of any span);
    ``text`` is the cleaned content of that slice.
    """

    trial_id: str
    kind: SectionKind
    text: str
    char_span: tuple[int, int]


@dataclass(frozen=True)
class Sentence:
    """One classification unit extracted from a section."""

    trial_id: str
    section_kind: SectionKind
    index: int
    text: str
    prefixed_text: str
    truncated: bool = False

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"sentence index must be >= 0, got {self.index}")
        expected = prefix_text(self.section_kind, self.text)
        if self.prefixed_text != expected:
            raise ValueError(
                f"prefixed_text {self.prefixed_text!r} does not match "
                f"section/text (expected {expected!r})"
            )


def prefix_text(kind: SectionKind, text: str) -> str:
    """Join section kind and sentence text as ``kind:text`` (no space)."""
    return f"{kind.value}:{text}"


_CRLF_RE = re.compile(r"\r\n?")
_INLINE_WS_RE = re.compile(r"[ \t\f\v]+")
_BLANK_RUN_RE = re.compile(r"\n{3,}")


def clean_text(raw: str) -> str:
    """Normalize whitespace without reflowing line structure.

    Runs of spaces/tabs collapse to one space, line ends are trimmed,
    ``\\r\\n`` becomes ``\\n``, and runs of three or more newlines collapse
    to a single newline (a lone blank line between paragraphs survives).
    Leading/trailing whitespace is stripped. The function is idempotent.
    """
    text = _CRLF_RE.sub("\n", raw)
    lines = [_INLINE_WS_RE.sub(" ", line).strip() for line in text.split("\n")]
    text = "\n".join(lines)
    text = _BLANK_RUN_RE.sub("\n", text)
    return text.strip()


_HEADER_RE = re.compile(r"^\s*(inclusion|exclusion)\s+criteria\s*:?\s*$", re.IGNORECASE)


def segment_sections(eligibility_text: str, trial_id: str = "") -> list[CriteriaSection]:
    """Split raw eligibility text into ordered criteria sections.

    A header line switches the kind of everything that follows until the
    next header. Text before any header is ``eligibility``. Header lines
    themselves belong to no section. Sections whose content cleans down to
    nothing are dropped. Spans never overlap and appear in document order.
    """
    spans: list[tuple[SectionKind, int, int]] = []
    kind = SectionKind.ELIGIBILITY
    start: int | None = None
    end = 0
    offset = 0
    for line in eligibility_text.splitlines(keepends=True):
        line_start = offset
        offset += len(line)
        header = _HEADER_RE.match(line)
        if header:
            if start is not None:
                spans.append((kind, start, end))
                start = None
            kind = SectionKind(header.group(1).lower())
            continue
        if start is None:
            start = line_start
        end = offset
    if start is not None:
        spans.append((kind, start, end))

    sections = []
    for span_kind, span_start, span_end in spans:
        text = clean_text(eligibility_text[span_start:span_end])
        if not text:
            continue
        sections.append(
            CriteriaSection(
                trial_id=trial_id,
                kind=span_kind,
                text=text,
                char_span=(span_start, span_end),
            )
        )
    return sections


# Bullet markers open a new sentence. Numbered markers ("1.", "23)") need
# trailing whitespace so dosages like "3.5 mg" are not split.
_BULLET_RE = re.compile(r"^(?:[-*•]\s*|\d+[.)]\s+)")
_TERMINAL_RE = re.compile(r"(?<=[.?!])\s+(?=[A-Z])")
_MIN_SENTENCE_CHARS = 3


def split_sentences(
    section: CriteriaSection, index_offset: int = 0
) -> list[Sentence]:
    """Split one section into sentences.

    Two passes: bullet lines start a new fragment (marker stripped) and
    plain lines continue the current fragment joined by a single space;
    then each fragment splits at terminal punctuation followed by an
    uppercase start. Fragments shorter than three characters are noise
    markers and are dropped. Indices are ``index_offset..``, in order.
    """
    fragments: list[str] = []
    current: list[str] = []
    for line in section.text.split("\n"):
        marker = _BULLET_RE.match(line)
        if marker:
            if current:
                fragments.append(" ".join(current))
            rest = line[marker.end():].strip()
            current = [rest] if rest else []
        elif line:
            current.append(line)
    if current:
        fragments.append(" ".join(current))

    texts: list[str] = []
    for fragment in fragments:
        for piece in _TERMINAL_RE.split(fragment):
            piece = piece.strip()
            if len(piece) >= _MIN_SENTENCE_CHARS:
                texts.append(piece)

    return [
        Sentence(
            trial_id=section.trial_id,
            section_kind=section.kind,
            index=index_offset + i,
            text=text,
            prefixed_text=prefix_text(section.kind, text),
        )
        for i, text in enumerate(texts)
    ]


def guard_length(sentence: Sentence, max_tokens: int = 400) -> Sentence:
    """Truncate a sentence to its first ``max_tokens`` whitespace tokens.

    The prefixed form is what gets budgeted (that is what models consume).
    Returns the sentence unchanged when it fits.
    """
    if max_tokens < 1:
        raise ValueError(f"max_tokens must be >= 1, got {max_tokens}")
    tokens = sentence.prefixed_text.split()
    if len(tokens) <= max_tokens:
        return sentence
    prefixed = " ".join(tokens[:max_tokens])
    prefix = f"{sentence.section_kind.value}:"
    text = prefixed[len(prefix):] if prefixed.startswith(prefix) else prefixed
    return replace(sentence, text=text, prefixed_text=prefixed, truncated=True)


def sentences_for_trial(
    trial_id: str, eligibility_text: str, max_tokens: int | None = 400
) -> list[Sentence]:
    """Run the full parse for one trial: segment, split, length-guard.

    Sentence indices are contiguous from zero across sections in document
    order, so (trial_id, index) is a stable key for annotation joins.
    """
    sentences: list[Sentence] = []
    for section in segment_sections(eligibility_text, trial_id=trial_id):
        sentences.extend(split_sentences(section, index_offset=len(sentences)))
    if max_tokens is not None:
        sentences = [guard_length(s, max_tokens) for s in sentences]
    return sentences


def write_sentences(sentences: Iterable[Sentence], path: str | Path) -> int:
    """Write sentences as JSONL. Returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for sentence in sentences:
            record = {
                "trial_id": sentence.trial_id,
                "section_kind": sentence.section_kind.value,
                "index": sentence.index,
                "text": sentence.text,
                "prefixed_text": sentence.prefixed_text,
                "truncated": sentence.truncated,
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_sentences(path: str | Path) -> Iterator[Sentence]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            yield Sentence(
                trial_id=record["trial_id"],
                section_kind=SectionKind(record["section_kind"]),
                index=record["index"],
                text=record["text"],
                prefixed_text=record["prefixed_text"],
                truncated=record.get("truncated", False),
            )
