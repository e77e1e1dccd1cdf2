"""Labeled pair generation under the three sampling strategies.

Strategies:
    S   — section anchors matched with same-topic / different-topic sections
          from other documents.
    RP  — paragraph anchors matched cross-document by the topic inherited
          from their section.
    CP  — intra-document only: adjacent same-section paragraph pairs are
          positives; section-boundary pairs plus random cross-section pairs
          are negatives, balanced per document where availability allows.

All sampling is driven by per-anchor PRNG streams derived from
(seed, anchor locator), so output is deterministic and order-independent.
Unordered pairs are globally deduplicated within a run; anchors whose
candidate pool runs dry are flagged, never silently dropped.

Pairs wire format (JSONL):

    {"pair_id": str, "strategy": "S"|"RP"|"CP", "label": 0|1,
     "a": {"doc_id": str, "section": int, "paragraph": int|null, "text": str},
     "b": {...}}
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, Document
from .errors import ParseError, ValidationError

STRATEGIES = ("S", "RP", "CP")


@dataclass(frozen=True)
class Chunk:
    """A section or paragraph treated as one classification unit."""

    doc_id: str
    kind: str  # "section" | "paragraph"
    locator: tuple[int, int | None]  # (section index, paragraph index or None)
    text: str
    topic_id: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("section", "paragraph"):
            raise ValidationError(f"unknown chunk kind {self.kind!r}")

    @property
    def key(self) -> tuple[str, int, int | None]:
        return (self.doc_id, self.locator[0], self.locator[1])


@dataclass(frozen=True)
class PairExample:
    pair_id: str
    a: Chunk
    b: Chunk
    label: int
    strategy: str

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {self.label}")
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        if self.a.key == self.b.key:
            raise ValidationError("pair members must have distinct locators")


@dataclass(frozen=True)
class SamplingConfig:
    strategy: str
    positives_per_anchor: int = 3
    negatives_per_anchor: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        if self.positives_per_anchor < 1 or self.negatives_per_anchor < 1:
            raise ValidationError("per-anchor counts must be >= 1")


@dataclass(frozen=True)
class AnchorFlag:
    """An anchor that could not be given its full quota of pairs."""

    chunk: Chunk
    wanted_pos: int
    got_pos: int
    wanted_neg: int
    got_neg: int


@dataclass
class SamplingResult:
    pairs: list[PairExample]
    flagged: list[AnchorFlag] = field(default_factory=list)

    def label_counts(self) -> tuple[int, int]:
        pos = sum(1 for p in self.pairs if p.label == 1)
        return pos, len(self.pairs) - pos


def _anchor_rng(seed: int, chunk: Chunk, salt: str) -> random.Random:
    para = "-" if chunk.locator[1] is None else str(chunk.locator[1])
    return random.Random(f"{seed}\x00{salt}\x00{chunk.doc_id}\x00{chunk.locator[0]}\x00{para}")


def _unordered(a: Chunk, b: Chunk) -> tuple:
    return (a.key, b.key) if a.key <= b.key else (b.key, a.key)


def section_chunks(corpus: Corpus) -> list[Chunk]:
    out = []
    for doc in corpus.documents:
        for si, sec in enumerate(doc.sections):
            out.append(
                Chunk(doc_id=doc.id, kind="section", locator=(si, None), text=sec.text,
                      topic_id=sec.topic_id)
            )
    return out


def paragraph_chunks(corpus: Corpus) -> list[Chunk]:
    """Paragraph chunks; each paragraph inherits its section's topic."""
    out = []
    for doc in corpus.documents:
        for si, sec in enumerate(doc.sections):
            for p in sec.paragraphs:
                out.append(
                    Chunk(doc_id=doc.id, kind="paragraph", locator=(si, p.index),
                          text=p.text, topic_id=sec.topic_id)
                )
    return out


def _draw(
    rng: random.Random,
    anchor: Chunk,
    pool: list[Chunk],
    want: int,
    seen: set[tuple],
) -> list[Chunk]:
    """Without-replacement draw from pool, skipping globally seen pairs."""
    order = list(pool)
    rng.shuffle(order)
    taken: list[Chunk] = []
    for cand in order:
        if len(taken) == want:
            break
        key = _unordered(anchor, cand)
        if key in seen:
            continue
        seen.add(key)
        taken.append(cand)
    return taken


def _sample_cross_document(
    anchors: list[Chunk], cfg: SamplingConfig, strategy: str
) -> SamplingResult:
    topics = {c.topic_id for c in anchors}
    missing = [c for c in anchors if c.topic_id is None]
    if missing:
        raise ValidationError(
            f"{strategy} sampling requires topic ids on every section; "
            f"{len(missing)} chunks are unlabeled (run assign-topics first)"
        )
    if len(topics) < 2:
        raise ValidationError(
            f"{strategy} sampling needs at least 2 topics; corpus has {len(topics)}"
        )

    by_topic: dict[str, list[Chunk]] = {}
    for c in anchors:
        by_topic.setdefault(c.topic_id, []).append(c)
    all_chunks = anchors

    pairs: list[PairExample] = []
    flagged: list[AnchorFlag] = []
    seen: set[tuple] = set()
    counter = 0
    for anchor in anchors:
        rng = _anchor_rng(cfg.seed, anchor, strategy)
        pos_pool = [
            c for c in by_topic[anchor.topic_id] if c.doc_id != anchor.doc_id
        ]
        neg_pool = [
            c for c in all_chunks
            if c.topic_id != anchor.topic_id and c.doc_id != anchor.doc_id
        ]
        pos = _draw(rng, anchor, pos_pool, cfg.positives_per_anchor, seen)
        neg = _draw(rng, anchor, neg_pool, cfg.negatives_per_anchor, seen)
        for cand in pos:
            pairs.append(PairExample(f"{strategy}-{counter:08d}", anchor, cand, 1, strategy))
            counter += 1
        for cand in neg:
            pairs.append(PairExample(f"{strategy}-{counter:08d}", anchor, cand, 0, strategy))
            counter += 1
        if len(pos) < cfg.positives_per_anchor or len(neg) < cfg.negatives_per_anchor:
            flagged.append(
                AnchorFlag(anchor, cfg.positives_per_anchor, len(pos),
                           cfg.negatives_per_anchor, len(neg))
            )
    return SamplingResult(pairs=pairs, flagged=flagged)


def sample_section_pairs(corpus: Corpus, cfg: SamplingConfig) -> SamplingResult:
    """Strategy S: section anchors, positives and negatives from other documents."""
    return _sample_cross_document(section_chunks(corpus), cfg, "S")


def sample_random_paragraph_pairs(corpus: Corpus, cfg: SamplingConfig) -> SamplingResult:
    """Strategy RP: paragraph anchors, cross-document, topic inherited from section."""
    return _sample_cross_document(paragraph_chunks(corpus), cfg, "RP")


def _document_cp_pairs(doc: Document, seed: int):
    """Positives, boundary negatives, and the cross-section fill pool for one document."""
    chunks: list[list[Chunk]] = []
    for si, sec in enumerate(doc.sections):
        chunks.append([
            Chunk(doc_id=doc.id, kind="paragraph", locator=(si, p.index), text=p.text,
                  topic_id=sec.topic_id)
            for p in sec.paragraphs
        ])
    positives: list[tuple[Chunk, Chunk]] = []
    for sec_chunks in chunks:
        for i in range(len(sec_chunks) - 1):
            positives.append((sec_chunks[i], sec_chunks[i + 1]))
    boundary: list[tuple[Chunk, Chunk]] = []
    for si in range(len(chunks) - 1):
        boundary.append((chunks[si][-1], chunks[si + 1][0]))
    boundary_keys = {_unordered(a, b) for a, b in boundary}
    cross_pool: list[tuple[Chunk, Chunk]] = []
    for si in range(len(chunks)):
        for sj in range(si + 1, len(chunks)):
            for a in chunks[si]:
                for b in chunks[sj]:
                    if _unordered(a, b) not in boundary_keys:
                        cross_pool.append((a, b))
    rng = random.Random(f"{seed}\x00CP\x00{doc.id}")
    rng.shuffle(cross_pool)
    need = max(0, len(positives) - len(boundary))
    extra = cross_pool[:need]
    return positives, boundary, extra


def sample_consecutive_pairs(corpus: Corpus, cfg: SamplingConfig) -> SamplingResult:
    """Strategy CP: intra-document pairs only; no topic ids required.

    Positives are all adjacent same-section paragraph pairs. Negatives are
    every section-boundary pair plus random cross-section pairs until the
    per-document negative count matches the positive count (capped by
    availability).
    """
    pairs: list[PairExample] = []
    counter = 0
    for doc in corpus.documents:
        positives, boundary, extra = _document_cp_pairs(doc, cfg.seed)
        for a, b in positives:
            pairs.append(PairExample(f"CP-{counter:08d}", a, b, 1, "CP"))
            counter += 1
        for a, b in boundary + extra:
            pairs.append(PairExample(f"CP-{counter:08d}", a, b, 0, "CP"))
            counter += 1
    if not pairs:
        raise ValidationError(
            "CP sampling produced no pairs (every document has a single paragraph)"
        )
    return SamplingResult(pairs=pairs, flagged=[])


def sample_pairs(corpus: Corpus, cfg: SamplingConfig) -> SamplingResult:
    if cfg.strategy == "S":
        return sample_section_pairs(corpus, cfg)
    if cfg.strategy == "RP":
        return sample_random_paragraph_pairs(corpus, cfg)
    return sample_consecutive_pairs(corpus, cfg)


def _chunk_to_record(chunk: Chunk) -> dict:
    return {
        "doc_id": chunk.doc_id,
        "section": chunk.locator[0],
        "paragraph": chunk.locator[1],
        "text": chunk.text,
    }


def _chunk_from_record(rec: dict, kind: str) -> Chunk:
    return Chunk(
        doc_id=rec["doc_id"],
        kind=kind,
        locator=(rec["section"], rec.get("paragraph")),
        text=rec["text"],
    )


def write_pairs(pairs: list[PairExample], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            rec = {
                "pair_id": p.pair_id,
                "strategy": p.strategy,
                "label": p.label,
                "a": _chunk_to_record(p.a),
                "b": _chunk_to_record(p.b),
            }
            fh.write(json.dumps(rec, ensure_ascii=False))
            fh.write("\n")


def read_pairs(path: str | Path) -> list[PairExample]:
    path = Path(path)
    out: list[PairExample] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                strategy = rec["strategy"]
                kind = "section" if strategy == "S" else "paragraph"
                out.append(
                    PairExample(
                        pair_id=rec["pair_id"],
                        a=_chunk_from_record(rec["a"], kind),
                        b=_chunk_from_record(rec["b"], kind),
                        label=rec["label"],
                        strategy=strategy,
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path.name}: line {lineno}: bad pair record: {exc}") from exc
    return out


def write_flags(flags: list[AnchorFlag], path: str | Path) -> None:
    """Sidecar report of anchors that fell short of their quota."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for f in flags:
            rec = {
                "doc_id": f.chunk.doc_id,
                "section": f.chunk.locator[0],
                "paragraph": f.chunk.locator[1],
                "wanted_pos": f.wanted_pos,
                "got_pos": f.got_pos,
                "wanted_neg": f.wanted_neg,
                "got_neg": f.got_neg,
            }
            fh.write(json.dumps(rec, ensure_ascii=False))
            fh.write("\n")
