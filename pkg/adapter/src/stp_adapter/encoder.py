"""Pair scorer around a transformer text encoder.

Two wirings, chosen by config: the default siamese mode embeds each chunk
separately (mean pooling over the attention mask) and scores either with a
trained [u; v; |u-v|] head or, headless, with a cosine-calibrated
similarity; cross mode feeds both chunks through one encoder pass and
requires a trained head on the pooled output.

Token budgets apply to the subword content of a pair before special
tokens: while over budget, the last subword of the currently longer side
is dropped (ties drop from the first), mirroring the word-level truncation
used elsewhere in the pipeline. Defaults: 1024 for the paired siamese
wiring, 512 for the single-encoder cross wiring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch

from .io import AdapterError, PairRecord

SIAMESE_BUDGET = 1024
CROSS_BUDGET = 512

HEAD_FILE = "pair_head.pt"
ADAPTER_CONFIG_FILE = "adapter_config.json"


@dataclass
class AdapterConfig:
    model: str
    batch_size: int = 32
    device: str = "cpu"
    mode: str = "siamese"  # or "cross"
    token_budget: int | None = None  # None: mode default

    def __post_init__(self) -> None:
        if self.mode not in ("siamese", "cross"):
            raise AdapterError(f"unknown mode {self.mode!r}")
        if self.batch_size < 1:
            raise AdapterError("batch size must be >= 1")

    @property
    def budget(self) -> int:
        if self.token_budget is not None:
            return self.token_budget
        return SIAMESE_BUDGET if self.mode == "siamese" else CROSS_BUDGET


def truncate_id_pair(
    ids_a: list[int], ids_b: list[int], budget: int
) -> tuple[list[int], list[int]]:
    la, lb = len(ids_a), len(ids_b)
    while la + lb > budget:
        if la >= lb:
            la -= 1
        else:
            lb -= 1
    return ids_a[:la], ids_b[:lb]


class PairScorer:
    """Loads the encoder (plus optional head) once; scores pair batches."""

    def __init__(self, config: AdapterConfig):
        from transformers import AutoModel, AutoTokenizer

        self.config = config
        path = Path(config.model)
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(config.model)
            self.encoder = AutoModel.from_pretrained(config.model)
        except Exception as exc:  # transformers raises a zoo of types here
            raise AdapterError(f"cannot load model {config.model!r}: {exc}") from exc
        self.device = torch.device(
            config.device if torch.cuda.is_available() or config.device == "cpu"
            else "cpu"
        )
        self.encoder.to(self.device)
        self.encoder.eval()
        self.head: torch.nn.Linear | None = None
        if path.is_dir():
            stored = path / ADAPTER_CONFIG_FILE
            if stored.exists():
                rec = json.loads(stored.read_text(encoding="utf-8"))
                self.config.mode = rec.get("mode", self.config.mode)
            head_path = path / HEAD_FILE
            if head_path.exists():
                state = torch.load(head_path, map_location="cpu")
                self.head = torch.nn.Linear(state["weight"].shape[1], 1)
                self.head.load_state_dict(state)
                self.head.to(self.device)
                self.head.eval()
        if self.config.mode == "cross" and self.head is None:
            raise AdapterError("cross mode needs a fine-tuned head (run finetune)")
        hidden = self.encoder.config.hidden_size
        if self.head is not None:
            expected = 3 * hidden if self.config.mode == "siamese" else hidden
            if self.head.in_features != expected:
                raise AdapterError(
                    f"head expects {self.head.in_features} features, encoder "
                    f"produces {expected} ({self.config.mode} mode)"
                )

    # --- tokenization -------------------------------------------------------

    def _content_ids(self, text: str) -> list[int]:
        return self.tokenizer(text, add_special_tokens=False)["input_ids"]

    def _pair_ids(self, record: PairRecord) -> tuple[list[int], list[int]]:
        specials = 4 if self.config.mode == "siamese" else 3
        per_side_cap = self.tokenizer.model_max_length - 2
        ids_a, ids_b = truncate_id_pair(
            self._content_ids(record.text_a),
            self._content_ids(record.text_b),
            max(2, self.config.budget - specials),
        )
        return ids_a[:per_side_cap], ids_b[:per_side_cap]

    def _batch(self, id_lists: list[list[int]]) -> dict[str, torch.Tensor]:
        cls_id, sep_id = self.tokenizer.cls_token_id, self.tokenizer.sep_token_id
        pad_id = self.tokenizer.pad_token_id
        rows = [[cls_id, *ids, sep_id] for ids in id_lists]
        width = max(len(r) for r in rows)
        input_ids = torch.full((len(rows), width), pad_id, dtype=torch.long)
        mask = torch.zeros((len(rows), width), dtype=torch.long)
        for i, row in enumerate(rows):
            input_ids[i, : len(row)] = torch.tensor(row, dtype=torch.long)
            mask[i, : len(row)] = 1
        return {"input_ids": input_ids.to(self.device),
                "attention_mask": mask.to(self.device)}

    # --- embedding and scoring ----------------------------------------------

    def embed_ids(self, id_lists: list[list[int]]) -> torch.Tensor:
        """Mean-pooled hidden states for each id sequence."""
        batch = self._batch(id_lists)
        hidden = self.encoder(**batch).last_hidden_state
        mask = batch["attention_mask"].unsqueeze(-1).to(hidden.dtype)
        return (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)

    def _score_siamese(self, records: list[PairRecord]) -> list[float]:
        probs: list[float] = []
        for start in range(0, len(records), self.config.batch_size):
            batch = records[start : start + self.config.batch_size]
            sides = [self._pair_ids(r) for r in batch]
            u = self.embed_ids([a for a, _ in sides])
            v = self.embed_ids([b for _, b in sides])
            if self.head is not None:
                feats = torch.cat([u, v, (u - v).abs()], dim=1)
                p = torch.sigmoid(self.head(feats).squeeze(1))
            else:
                # headless: calibrate cosine similarity onto [0, 1]
                p = (torch.nn.functional.cosine_similarity(u, v) + 1.0) / 2.0
            probs.extend(p.clamp(0.0, 1.0).tolist())
        return probs

    def _score_cross(self, records: list[PairRecord]) -> list[float]:
        sep = self.tokenizer.sep_token_id
        probs: list[float] = []
        for start in range(0, len(records), self.config.batch_size):
            batch = records[start : start + self.config.batch_size]
            joined = []
            for r in batch:
                ids_a, ids_b = self._pair_ids(r)
                joined.append([*ids_a, sep, *ids_b])
            pooled = self.embed_ids(joined)
            p = torch.sigmoid(self.head(pooled).squeeze(1))
            probs.extend(p.clamp(0.0, 1.0).tolist())
        return probs

    def score_records(self, records: list[PairRecord]) -> list[tuple[str, float]]:
        with torch.no_grad():
            if self.config.mode == "siamese":
                probs = self._score_siamese(records)
            else:
                probs = self._score_cross(records)
        return [(r.pair_id, float(p)) for r, p in zip(records, probs)]
