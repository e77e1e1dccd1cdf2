"""Pairs / scores JSONL handling for the file protocol.

Self-contained on purpose: the adapter talks to the segmentation toolkit
only through these files, never through imports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class AdapterError(Exception):
    """Data or model problem the caller can act on."""


@dataclass(frozen=True)
class PairRecord:
    pair_id: str
    text_a: str
    text_b: str
    label: int | None  # may be absent for inference-only pairs


def read_pairs(path: str | Path) -> list[PairRecord]:
    """Parse a pairs JSONL file; errors name the offending line."""
    path = Path(path)
    if not path.exists():
        raise AdapterError(f"pairs file not found: {path}")
    out: list[PairRecord] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pair_id = rec["pair_id"]
                text_a = rec["a"]["text"]
                text_b = rec["b"]["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise AdapterError(
                    f"{path.name}: line {lineno}: malformed pair record: {exc}"
                ) from exc
            if pair_id in seen:
                raise AdapterError(
                    f"{path.name}: line {lineno}: duplicate pair_id {pair_id!r}"
                )
            seen.add(pair_id)
            label = rec.get("label")
            if label is not None and label not in (0, 1):
                raise AdapterError(
                    f"{path.name}: line {lineno}: label must be 0 or 1, got {label!r}"
                )
            out.append(PairRecord(pair_id, str(text_a), str(text_b), label))
    if not out:
        raise AdapterError(f"{path.name}: no pairs found")
    return out


def write_scores(scores: list[tuple[str, float]], path: str | Path) -> None:
    """One {"pair_id", "prob"} line per pair, in input order."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for pair_id, prob in scores:
            fh.write(json.dumps({"pair_id": pair_id, "prob": prob}))
            fh.write("\n")
