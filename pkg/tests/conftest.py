from __future__ import annotations

import random

import pytest

from topseg.corpus import Corpus, Document, section_from_texts
from topseg.inference import Segmentation


def make_doc(doc_id: str, section_specs: list[tuple[str, str | None, int]]) -> Document:
    """section_specs: (heading, topic_id, n_paragraphs)."""
    sections = []
    for si, (heading, topic, n_paras) in enumerate(section_specs):
        texts = [f"{doc_id} section {si} paragraph {j} body text." for j in range(n_paras)]
        sections.append(section_from_texts([heading], texts, topic_id=topic))
    return Document(id=doc_id, source_url=None, sections=tuple(sections))


def random_segmentation(rng: random.Random, n_paragraphs: int, doc_id: str = "d") -> Segmentation:
    labels = tuple(rng.randint(0, 1) for _ in range(n_paragraphs - 1))
    return Segmentation(doc_id=doc_id, labels=labels)


@pytest.fixture
def tiny_labeled_corpus() -> Corpus:
    """Four documents, two topics, every section labeled."""
    docs = [
        make_doc("doc-a", [("Privacy", "privacy", 2), ("Liability", "liability", 2)]),
        make_doc("doc-b", [("Privacy", "privacy", 3), ("Liability", "liability", 2)]),
        make_doc("doc-c", [("Liability", "liability", 2), ("Privacy", "privacy", 2)]),
        make_doc("doc-d", [("Privacy", "privacy", 2), ("Liability", "liability", 3)]),
    ]
    return Corpus(documents=docs)
