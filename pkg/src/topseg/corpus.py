"""Document data model, corpus JSONL format, deterministic splitting, statistics.

A corpus is a list of documents; a document is an ordered list of sections;
a section is an ordered list of paragraphs plus a heading path (outermost
heading first) and an optional topic id. The document-level paragraph order
is the concatenation of the section paragraph lists.

Wire format (one document per line, UTF-8, LF):

    {"id": str, "source_url": str|null,
     "sections": [{"heading_path": [str, ...], "topic_id": str|null,
                   "paragraphs": [str, ...]}, ...]}
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, ValidationError

SPLIT_TAGS = ("unsplit", "train", "dev", "test")

# Histogram key for sections that carry no topic_id.
UNLABELED_TOPIC = "(unlabeled)"


@dataclass(frozen=True)
class Paragraph:
    text: str
    index: int  # 0-based position within its section

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValidationError("paragraph text is empty after trimming")
        if self.index < 0:
            raise ValidationError(f"paragraph index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class Section:
    heading_path: tuple[str, ...]
    topic_id: str | None
    paragraphs: tuple[Paragraph, ...]

    def __post_init__(self) -> None:
        if not self.paragraphs:
            raise ValidationError("section has zero paragraphs")
        for i, p in enumerate(self.paragraphs):
            if p.index != i:
                raise ValidationError(
                    f"paragraph indices must be consecutive from 0, got {p.index} at {i}"
                )

    @property
    def text(self) -> str:
        """Section text: paragraphs joined by blank lines."""
        return "\n\n".join(p.text for p in self.paragraphs)


@dataclass(frozen=True)
class Document:
    id: str
    source_url: str | None
    sections: tuple[Section, ...]

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("document id is empty")
        if not self.sections:
            raise ValidationError(f"document {self.id!r} has no sections")

    def paragraphs(self) -> list[tuple[int, int, str]]:
        """Flat paragraph list as (section_index, paragraph_index, text)."""
        out = []
        for si, sec in enumerate(self.sections):
            for p in sec.paragraphs:
                out.append((si, p.index, p.text))
        return out

    @property
    def paragraph_count(self) -> int:
        return sum(len(s.paragraphs) for s in self.sections)


@dataclass
class Corpus:
    documents: list[Document]
    split_tag: str = "unsplit"

    def __post_init__(self) -> None:
        if self.split_tag not in SPLIT_TAGS:
            raise ValidationError(f"unknown split tag {self.split_tag!r}")
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise ValidationError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self) -> int:
        return len(self.documents)


@dataclass(frozen=True)
class CorpusStats:
    doc_count: int
    mean_sections_per_doc: float
    mean_paragraphs_per_doc: float
    topic_histogram: dict[str, int] = field(hash=False)


def paragraph_from_text(text: str, index: int) -> Paragraph:
    return Paragraph(text=text.strip(), index=index)


def section_from_texts(
    heading_path: list[str] | tuple[str, ...],
    paragraphs: list[str],
    topic_id: str | None = None,
) -> Section:
    return Section(
        heading_path=tuple(heading_path),
        topic_id=topic_id,
        paragraphs=tuple(paragraph_from_text(t, i) for i, t in enumerate(paragraphs)),
    )


def _document_from_record(rec: dict, lineno: int) -> Document:
    try:
        doc_id = rec["id"]
        sections_raw = rec["sections"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"line {lineno}: missing required field {exc}") from exc
    if not isinstance(doc_id, str):
        raise ParseError(f"line {lineno}: document id must be a string")
    if not isinstance(sections_raw, list):
        raise ParseError(f"line {lineno}: sections must be a list")
    sections = []
    try:
        for sec in sections_raw:
            sections.append(
                section_from_texts(
                    heading_path=[str(h) for h in sec.get("heading_path", [])],
                    paragraphs=[str(t) for t in sec.get("paragraphs", [])],
                    topic_id=sec.get("topic_id"),
                )
            )
        return Document(id=doc_id, source_url=rec.get("source_url"), sections=tuple(sections))
    except ValidationError as exc:
        raise ValidationError(f"line {lineno}: document {doc_id!r}: {exc}") from exc


def load_corpus(path: str | Path, split_tag: str = "unsplit") -> Corpus:
    """Load and validate a corpus JSONL file.

    Raises ParseError naming the line for malformed JSON, ValidationError for
    invariant violations (duplicate ids cite the later line).
    """
    path = Path(path)
    documents: list[Document] = []
    seen: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path.name}: line {lineno}: malformed JSON: {exc.msg}") from exc
            doc = _document_from_record(rec, lineno)
            if doc.id in seen:
                raise ValidationError(
                    f"{path.name}: line {lineno}: duplicate document id {doc.id!r} "
                    f"(first seen on line {seen[doc.id]})"
                )
            seen[doc.id] = lineno
            documents.append(doc)
    return Corpus(documents=documents, split_tag=split_tag)


def document_to_record(doc: Document) -> dict:
    return {
        "id": doc.id,
        "source_url": doc.source_url,
        "sections": [
            {
                "heading_path": list(sec.heading_path),
                "topic_id": sec.topic_id,
                "paragraphs": [p.text for p in sec.paragraphs],
            }
            for sec in doc.sections
        ],
    }


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write corpus JSONL (UTF-8, LF). Deterministic byte-for-byte."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus.documents:
            fh.write(json.dumps(document_to_record(doc), ensure_ascii=False))
            fh.write("\n")


def split_corpus(
    corpus: Corpus, ratios: tuple[float, float, float], seed: int
) -> tuple[Corpus, Corpus, Corpus]:
    """Seeded shuffle then partition into (train, dev, test).

    Sizes: floor(ratio*n) for dev and test, remainder to train. Deterministic
    in (document order, ratios, seed); whole documents are the shuffle unit.
    """
    if corpus.split_tag != "unsplit":
        raise ValidationError(f"corpus already split (tag {corpus.split_tag!r})")
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValidationError("ratios must be three positive numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {sum(ratios)}")
    n = len(corpus.documents)
    if n < 3:
        raise ValidationError(f"need at least 3 documents to split, got {n}")

    docs = list(corpus.documents)
    random.Random(seed).shuffle(docs)
    n_dev = int(ratios[1] * n)
    n_test = int(ratios[2] * n)
    n_train = n - n_dev - n_test
    train = docs[:n_train]
    dev = docs[n_train : n_train + n_dev]
    test = docs[n_train + n_dev :]
    return (
        Corpus(train, split_tag="train"),
        Corpus(dev, split_tag="dev"),
        Corpus(test, split_tag="test"),
    )


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Exact means plus a per-topic section histogram."""
    if not corpus.documents:
        raise ValidationError("cannot compute stats of an empty corpus")
    n = len(corpus.documents)
    total_sections = sum(len(d.sections) for d in corpus.documents)
    total_paragraphs = sum(d.paragraph_count for d in corpus.documents)
    histogram: dict[str, int] = {}
    for doc in corpus.documents:
        for sec in doc.sections:
            key = sec.topic_id if sec.topic_id is not None else UNLABELED_TOPIC
            histogram[key] = histogram.get(key, 0) + 1
    return CorpusStats(
        doc_count=n,
        mean_sections_per_doc=total_sections / n,
        mean_paragraphs_per_doc=total_paragraphs / n,
        topic_histogram=histogram,
    )
