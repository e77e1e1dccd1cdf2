"""Planted-topic synthetic corpora for tests and acceptance runs.

Each topic owns a disjoint vocabulary; paragraphs mix topic words with a
shared noise vocabulary at a configurable rate. Adjacent sections never
share a topic, so section boundaries are exactly the topic boundaries and
the ground truth is unambiguous by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Corpus, Document, section_from_texts
from .errors import ValidationError


@dataclass(frozen=True)
class SynthConfig:
    n_docs: int = 200
    n_topics: int = 5
    topic_vocab_size: int = 50
    noise_vocab_size: int = 50
    noise_rate: float = 0.1
    sections_per_doc: tuple[int, int] = (3, 6)
    paragraphs_per_section: tuple[int, int] = (2, 5)
    tokens_per_paragraph: tuple[int, int] = (30, 60)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_docs < 1 or self.n_topics < 2:
            raise ValidationError("need at least 1 document and 2 topics")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValidationError(f"noise rate must be in [0, 1), got {self.noise_rate}")


def _topic_sequence(rng: random.Random, n_sections: int, n_topics: int) -> list[int]:
    seq = [rng.randrange(n_topics)]
    while len(seq) < n_sections:
        candidate = rng.randrange(n_topics)
        if candidate != seq[-1]:
            seq.append(candidate)
    return seq


def make_synthetic_corpus(cfg: SynthConfig = SynthConfig()) -> Corpus:
    rng = random.Random(cfg.seed)
    topic_vocab = [
        [f"topic{t}word{j}" for j in range(cfg.topic_vocab_size)]
        for t in range(cfg.n_topics)
    ]
    noise_vocab = [f"noiseword{j}" for j in range(cfg.noise_vocab_size)]

    def paragraph(topic: int) -> str:
        count = rng.randint(*cfg.tokens_per_paragraph)
        words = [
            rng.choice(noise_vocab)
            if rng.random() < cfg.noise_rate
            else rng.choice(topic_vocab[topic])
            for _ in range(count)
        ]
        return " ".join(words) + "."

    documents = []
    for i in range(cfg.n_docs):
        n_sections = rng.randint(*cfg.sections_per_doc)
        sections = []
        for t in _topic_sequence(rng, n_sections, cfg.n_topics):
            topic_id = f"topic{t}"
            paras = [
                paragraph(t) for _ in range(rng.randint(*cfg.paragraphs_per_section))
            ]
            sections.append(
                section_from_texts([f"all about {topic_id}"], paras, topic_id=topic_id)
            )
        documents.append(
            Document(id=f"synth-{i:04d}", source_url=None, sections=tuple(sections))
        )
    return Corpus(documents=documents)
