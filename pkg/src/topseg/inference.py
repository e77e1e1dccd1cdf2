"""Sequential segmentation from pairwise scores, the informed random oracle,
and majority-vote ensembling.

A segmentation over a k-paragraph document is a bit vector y of length k-1:
y_i = 1 means paragraphs i and i+1 share a topic, y_i = 0 marks a segment
boundary after paragraph i. Every adjacent pair is scored independently of
its surrounding context.

Wire format (JSONL): {"doc_id": str, "labels": [0|1, ...],
"probs": [float, ...]|null, "scorer": str, "seed": int}. Ensembles are not
seed-driven and write the sentinel seed -1.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import Document
from .errors import ParseError, ValidationError
from .sampling import Chunk
from .scorers import ScorerModel, score_pair


@dataclass(frozen=True)
class Segmentation:
    doc_id: str
    labels: tuple[int, ...]
    probs: tuple[float, ...] | None = None
    scorer: str = ""
    seed: int = 0

    def __post_init__(self) -> None:
        if any(v not in (0, 1) for v in self.labels):
            raise ValidationError("segmentation labels must be 0 or 1")
        if self.probs is not None and len(self.probs) != len(self.labels):
            raise ValidationError("probs and labels must have equal length")

    @property
    def paragraph_count(self) -> int:
        return len(self.labels) + 1

    @property
    def segment_count(self) -> int:
        return sum(1 for v in self.labels if v == 0) + 1


@dataclass(frozen=True)
class SegmenterConfig:
    scorer: ScorerModel
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold < 1.0:
            raise ValidationError(f"threshold must be in (0, 1), got {self.threshold}")


def _adjacent_chunks(doc: Document) -> list[tuple[Chunk, Chunk]]:
    flat = [
        Chunk(doc_id=doc.id, kind="paragraph", locator=(si, pi), text=text)
        for si, pi, text in doc.paragraphs()
    ]
    return list(zip(flat, flat[1:]))


def segment_document(doc: Document, cfg: SegmenterConfig, seed: int = 0) -> Segmentation:
    """Score each adjacent paragraph pair; y_i = 1 iff prob >= threshold.

    A single-paragraph document yields a degenerate empty segmentation.
    """
    pairs = _adjacent_chunks(doc)
    probs = tuple(score_pair(cfg.scorer, a, b) for a, b in pairs)
    labels = tuple(1 if p >= cfg.threshold else 0 for p in probs)
    return Segmentation(doc_id=doc.id, labels=labels, probs=probs,
                        scorer=cfg.scorer.name, seed=seed)


def segment_from_scores(
    doc: Document, probs: list[float], threshold: float = 0.5, scorer: str = "external",
    seed: int = 0,
) -> Segmentation:
    """Assemble a segmentation from externally produced adjacent-pair probabilities."""
    expected = doc.paragraph_count - 1
    if len(probs) != expected:
        raise ValidationError(
            f"{doc.id}: expected {expected} adjacent-pair probs, got {len(probs)}"
        )
    labels = tuple(1 if p >= threshold else 0 for p in probs)
    return Segmentation(doc_id=doc.id, labels=labels, probs=tuple(probs),
                        scorer=scorer, seed=seed)


def _section_keys(doc: Document) -> list[tuple]:
    """Grouping key per section: topic when labeled, else top-level heading,
    else the section's own index (every break a boundary)."""
    keys: list[tuple] = []
    for si, sec in enumerate(doc.sections):
        if sec.topic_id is not None:
            keys.append(("topic", sec.topic_id))
        elif sec.heading_path:
            keys.append(("heading", sec.heading_path[0]))
        else:
            keys.append(("index", si))
    return keys


def reference_segmentation(doc: Document) -> Segmentation:
    """Ground-truth labels: adjacent paragraphs share a topic iff they lie in
    the same section or in adjacent sections with the same grouping key."""
    keys = _section_keys(doc)
    labels: list[int] = []
    prev_section: int | None = None
    for si, _, _ in doc.paragraphs():
        if prev_section is None:
            prev_section = si
            continue
        if si == prev_section:
            labels.append(1)
        else:
            labels.append(1 if keys[si] == keys[prev_section] else 0)
            prev_section = si
    return Segmentation(doc_id=doc.id, labels=tuple(labels), probs=None,
                        scorer="reference")


def random_oracle_segment(doc: Document, seed: int) -> Segmentation:
    """Informed random baseline: each slot draws a boundary independently
    with probability (#reference segments) / (#paragraphs)."""
    n = doc.paragraph_count
    if n < 2:
        return Segmentation(doc_id=doc.id, labels=(), probs=None,
                            scorer="random_oracle", seed=seed)
    p_boundary = reference_segmentation(doc).segment_count / n
    rng = random.Random(f"{seed}\x00oracle\x00{doc.id}")
    labels = tuple(0 if rng.random() < p_boundary else 1 for _ in range(n - 1))
    return Segmentation(doc_id=doc.id, labels=labels, probs=None,
                        scorer="random_oracle", seed=seed)


def ensemble_majority(runs: list[Segmentation]) -> Segmentation:
    """Per-position majority vote; exact ties resolve to 1 (no boundary)."""
    if not runs:
        raise ValidationError("ensemble needs at least one run")
    first = runs[0]
    for run in runs[1:]:
        if run.doc_id != first.doc_id:
            raise ValidationError(
                f"ensemble runs mix documents: {first.doc_id!r} vs {run.doc_id!r}"
            )
        if len(run.labels) != len(first.labels):
            raise ValidationError(
                f"{first.doc_id}: run lengths differ "
                f"({len(first.labels)} vs {len(run.labels)})"
            )
    n = len(runs)
    labels = tuple(
        1 if 2 * sum(run.labels[i] for run in runs) >= n else 0
        for i in range(len(first.labels))
    )
    names = sorted({run.scorer for run in runs})
    return Segmentation(doc_id=first.doc_id, labels=labels, probs=None,
                        scorer="ensemble(" + "+".join(names) + ")", seed=-1)


def to_sections(seg: Segmentation, doc: Document | None = None) -> list[tuple[int, int]]:
    """Decompose labels into maximal same-topic runs of paragraph indices.

    Returns inclusive (start, end) ranges; range count = zeros(labels) + 1.
    """
    if doc is not None and doc.paragraph_count != seg.paragraph_count:
        raise ValidationError(
            f"{seg.doc_id}: segmentation covers {seg.paragraph_count} paragraphs, "
            f"document has {doc.paragraph_count}"
        )
    ranges: list[tuple[int, int]] = []
    start = 0
    for i, label in enumerate(seg.labels):
        if label == 0:
            ranges.append((start, i))
            start = i + 1
    ranges.append((start, len(seg.labels)))
    return ranges


def write_segmentations(segs: list[Segmentation], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for seg in segs:
            rec = {
                "doc_id": seg.doc_id,
                "labels": list(seg.labels),
                "probs": None if seg.probs is None else list(seg.probs),
                "scorer": seg.scorer,
                "seed": seg.seed,
            }
            fh.write(json.dumps(rec))
            fh.write("\n")


def read_segmentations(path: str | Path) -> list[Segmentation]:
    path = Path(path)
    out: list[Segmentation] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(
                    Segmentation(
                        doc_id=rec["doc_id"],
                        labels=tuple(rec["labels"]),
                        probs=None if rec.get("probs") is None else tuple(rec["probs"]),
                        scorer=rec.get("scorer", ""),
                        seed=rec.get("seed", 0),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(
                    f"{path.name}: line {lineno}: bad segmentation record: {exc}"
                ) from exc
    return out
