"""Pair-classification fine-tuning with binary cross-entropy.

Siamese mode trains the encoder end-to-end with a linear head over
[u; v; |u-v|]; cross mode pools a single joint pass. Saves a model
directory that `PairScorer` loads directly (encoder + tokenizer +
pair_head.pt + adapter_config.json) and reports dev accuracy per epoch.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

import torch

from .encoder import ADAPTER_CONFIG_FILE, HEAD_FILE, AdapterConfig, PairScorer
from .io import AdapterError, PairRecord, read_pairs


@dataclass
class FinetuneConfig:
    model: str
    mode: str = "siamese"
    epochs: int = 8
    batch_size: int = 16
    learning_rate: float = 3e-4
    seed: int = 0
    device: str = "cpu"
    token_budget: int | None = None


def _require_both_classes(records: list[PairRecord], name: str) -> None:
    labels = {r.label for r in records}
    if None in labels:
        raise AdapterError(f"{name}: every pair needs a label for fine-tuning")
    if labels != {0, 1}:
        raise AdapterError(f"{name}: need both classes, got labels {sorted(labels)}")


def _dev_accuracy(scorer: PairScorer, records: list[PairRecord]) -> float:
    scored = scorer.score_records(records)
    hits = sum(
        1 for (_, prob), rec in zip(scored, records)
        if (prob >= 0.5) == bool(rec.label)
    )
    return hits / len(records)


def run_finetune(
    train_path: str | Path,
    dev_path: str | Path,
    out_dir: str | Path,
    cfg: FinetuneConfig,
) -> dict:
    train = read_pairs(train_path)
    dev = read_pairs(dev_path)
    _require_both_classes(train, Path(train_path).name)
    _require_both_classes(dev, Path(dev_path).name)

    torch.manual_seed(cfg.seed)
    scorer = PairScorer(AdapterConfig(
        model=cfg.model, mode=cfg.mode, device=cfg.device,
        token_budget=cfg.token_budget, batch_size=cfg.batch_size,
    ))
    hidden = scorer.encoder.config.hidden_size
    head_in = 3 * hidden if cfg.mode == "siamese" else hidden
    head = torch.nn.Linear(head_in, 1).to(scorer.device)
    scorer.head = head  # shared by dev scoring between epochs

    params = list(scorer.encoder.parameters()) + list(head.parameters())
    optimizer = torch.optim.AdamW(params, lr=cfg.learning_rate)
    loss_fn = torch.nn.BCEWithLogitsLoss()
    rng = random.Random(cfg.seed)

    history: list[dict] = []
    for epoch in range(cfg.epochs):
        order = list(range(len(train)))
        rng.shuffle(order)
        scorer.encoder.train()
        head.train()
        total_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [train[i] for i in order[start : start + cfg.batch_size]]
            sides = [scorer._pair_ids(r) for r in batch]
            labels = torch.tensor([float(r.label) for r in batch],
                                  device=scorer.device)
            optimizer.zero_grad()
            if cfg.mode == "siamese":
                u = scorer.embed_ids([a for a, _ in sides])
                v = scorer.embed_ids([b for _, b in sides])
                logits = head(torch.cat([u, v, (u - v).abs()], dim=1)).squeeze(1)
            else:
                sep = scorer.tokenizer.sep_token_id
                pooled = scorer.embed_ids([[*a, sep, *b] for a, b in sides])
                logits = head(pooled).squeeze(1)
            loss = loss_fn(logits, labels)
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach()) * len(batch)
        scorer.encoder.eval()
        head.eval()
        accuracy = _dev_accuracy(scorer, dev)
        history.append({
            "epoch": epoch,
            "train_loss": total_loss / len(train),
            "dev_accuracy": accuracy,
        })
        print(f"finetune: epoch {epoch}: loss {history[-1]['train_loss']:.4f} "
              f"dev accuracy {accuracy:.4f}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scorer.encoder.save_pretrained(out_dir)
    scorer.tokenizer.save_pretrained(out_dir)
    torch.save(head.state_dict(), out_dir / HEAD_FILE)
    (out_dir / ADAPTER_CONFIG_FILE).write_text(
        json.dumps({
            "mode": cfg.mode,
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "learning_rate": cfg.learning_rate,
            "seed": cfg.seed,
            "dev_accuracy": history[-1]["dev_accuracy"],
        }, indent=2) + "\n",
        encoding="utf-8",
    )
    return {"history": history, "dev_accuracy": history[-1]["dev_accuracy"],
            "out_dir": str(out_dir)}
