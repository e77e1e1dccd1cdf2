"""Deterministic hash-based stand-in for an external pair scorer.

Exercises the pairs-in / scores-out protocol in CI without any model: the
probability is a pure function of the two texts (order-independent), so two
runs over the same pairs file are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def stub_score(text_a: str, text_b: str) -> float:
    key = "\x00".join(sorted((text_a, text_b))).encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def stub_score_file(pairs_path: str | Path, out_path: str | Path) -> int:
    """Score every pair in a pairs JSONL file; returns the pair count."""
    pairs_path, out_path = Path(pairs_path), Path(out_path)
    count = 0
    with pairs_path.open("r", encoding="utf-8") as fin, \
            out_path.open("w", encoding="utf-8", newline="\n") as fout:
        for line in fin:
            if not line.strip():
                continue
            rec = json.loads(line)
            prob = stub_score(rec["a"]["text"], rec["b"]["text"])
            fout.write(json.dumps({"pair_id": rec["pair_id"], "prob": prob}))
            fout.write("\n")
            count += 1
    return count
