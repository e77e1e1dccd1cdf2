"""Heading normalization, the manual alias table, and topic assignment.

Topic grouping is hand-curated: the toolkit ships an editable alias file and
 a candidate-listing helper for the curator, but never invents groupings.
Only the top-level heading of a section's heading path takes part in
matching; aliases and headings are both normalized before comparison.

Alias file format (JSON):

    {"topics": {"<topic_id>": ["alias", ...], ...}, "blocklist": ["...", ...]}
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, Document, Section
from .errors import ParseError, ValidationError
from .extract import recognize_enumeration

DEFAULT_MIN_ALIAS_COUNT = 250


def _strip_punctuation(text: str) -> str:
    return "".join(
        " " if unicodedata.category(ch).startswith("P") else ch for ch in text
    )


def normalize_heading(text: str) -> str:
    """Case-fold, strip enumeration prefixes, drop punctuation, collapse spaces.

    Idempotent: enumeration stripping runs to a fixpoint both before and after
    punctuation removal (removal can expose a prefixed form like "section 3").
    """
    out = text.casefold()
    while True:
        pattern = recognize_enumeration(out)
        if pattern is None:
            break
        out = out[len(pattern.raw) :].lstrip()
    out = re.sub(r"\s+", " ", _strip_punctuation(out)).strip()
    while True:
        pattern = recognize_enumeration(out)
        if pattern is None or pattern.prefix is None:
            break
        out = out[len(pattern.raw) :].lstrip()
    return out


@dataclass
class AliasTable:
    alias_to_topic: dict[str, str]
    blocklist: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        if not self.alias_to_topic:
            raise ValidationError("alias table is empty")
        for alias in self.alias_to_topic:
            if not alias:
                raise ValidationError("empty alias string in table")

    @property
    def topic_ids(self) -> list[str]:
        return sorted(set(self.alias_to_topic.values()))

    @property
    def topic_count(self) -> int:
        return len(set(self.alias_to_topic.values()))

    def lookup(self, heading: str) -> str | None:
        key = normalize_heading(heading)
        if not key or key in self.blocklist:
            return None
        return self.alias_to_topic.get(key)


def load_alias_table(path: str | Path) -> AliasTable:
    """Load and normalize an alias file; an alias may serve only one topic."""
    path = Path(path)
    try:
        rec = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path.name}: malformed JSON: {exc.msg}") from exc
    topics = rec.get("topics")
    if not isinstance(topics, dict) or not topics:
        raise ValidationError(f"{path.name}: missing or empty 'topics' mapping")
    alias_to_topic: dict[str, str] = {}
    for topic_id, aliases in topics.items():
        for alias in aliases:
            key = normalize_heading(str(alias))
            if not key:
                raise ValidationError(
                    f"{path.name}: alias {alias!r} normalizes to an empty string"
                )
            owner = alias_to_topic.get(key)
            if owner is not None and owner != topic_id:
                raise ValidationError(
                    f"{path.name}: alias {alias!r} maps to both "
                    f"{owner!r} and {topic_id!r}"
                )
            alias_to_topic[key] = topic_id
    blocklist = {normalize_heading(str(b)) for b in rec.get("blocklist", [])}
    return AliasTable(alias_to_topic=alias_to_topic, blocklist=blocklist - {""})


def assign_topics(corpus: Corpus, aliases: AliasTable) -> Corpus:
    """Tag sections whose normalized top-level heading is in the table; drop
    the rest, then drop documents left without sections. Order is preserved."""
    out_docs: list[Document] = []
    for doc in corpus.documents:
        kept: list[Section] = []
        for sec in doc.sections:
            if not sec.heading_path:
                raise ValidationError(
                    f"{doc.id}: section without heading_path cannot be topic-matched"
                )
            topic = aliases.lookup(sec.heading_path[0])
            if topic is not None:
                kept.append(
                    Section(heading_path=sec.heading_path, topic_id=topic,
                            paragraphs=sec.paragraphs)
                )
        if kept:
            out_docs.append(
                Document(id=doc.id, source_url=doc.source_url, sections=tuple(kept))
            )
    return Corpus(documents=out_docs, split_tag=corpus.split_tag)


def build_alias_candidates(
    corpus: Corpus, min_count: int = DEFAULT_MIN_ALIAS_COUNT
) -> list[tuple[str, int]]:
    """Normalized top-level headings occurring at least min_count times,
    sorted by count descending then string ascending. Curator assistance only."""
    if min_count < 1:
        raise ValidationError(f"min_count must be >= 1, got {min_count}")
    counts: dict[str, int] = {}
    for doc in corpus.documents:
        for sec in doc.sections:
            if not sec.heading_path:
                continue
            key = normalize_heading(sec.heading_path[0])
            if key:
                counts[key] = counts.get(key, 0) + 1
    frequent = [(h, c) for h, c in counts.items() if c >= min_count]
    return sorted(frequent, key=lambda hc: (-hc[1], hc[0]))
