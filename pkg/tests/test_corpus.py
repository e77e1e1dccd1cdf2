from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topseg.corpus import (
    Corpus,
    Document,
    corpus_stats,
    load_corpus,
    save_corpus,
    section_from_texts,
    split_corpus,
)
from topseg.errors import ParseError, ValidationError

from conftest import make_doc


def _record(doc_id: str, n_sections: int = 1) -> dict:
    return {
        "id": doc_id,
        "source_url": None,
        "sections": [
            {"heading_path": [f"H{i}"], "topic_id": None, "paragraphs": ["Some text."]}
            for i in range(n_sections)
        ],
    }


def _write_jsonl(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")


class TestLoadCorpus:
    def test_two_valid_records(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_jsonl(path, [_record("doc-1"), _record("doc-2", 2)])
        corpus = load_corpus(path)
        assert len(corpus) == 2
        assert corpus.documents[1].id == "doc-2"

    def test_zero_paragraph_section_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        rec = _record("doc-1")
        rec["sections"][0]["paragraphs"] = []
        _write_jsonl(path, [rec])
        with pytest.raises(ValidationError):
            load_corpus(path)

    def test_duplicate_id_cites_second_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_jsonl(path, [_record("doc-1"), _record("doc-2"), _record("doc-1")])
        with pytest.raises(ValidationError, match="line 3"):
            load_corpus(path)

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(_record("a")) + "\n{not json\n", encoding="utf-8")
        with pytest.raises(ParseError, match="line 2"):
            load_corpus(path)

    def test_round_trip_preserves_documents(self, tmp_path):
        docs = [make_doc("x", [("A", "t1", 2), ("B", None, 1)])]
        corpus = Corpus(documents=docs)
        path = tmp_path / "c.jsonl"
        save_corpus(corpus, path)
        again = load_corpus(path)
        assert again.documents == corpus.documents


class TestSplitCorpus:
    def _corpus(self, n: int) -> Corpus:
        return Corpus([make_doc(f"d{i:03d}", [("H", None, 1)]) for i in range(n)])

    def test_ten_docs_80_10_10(self):
        train, dev, test = split_corpus(self._corpus(10), (0.8, 0.1, 0.1), seed=0)
        assert (len(train), len(dev), len(test)) == (8, 1, 1)

    def test_43_docs_floor_rule(self):
        # floor(43 * 0.1) = 4 for dev and test, remainder 35 to train
        train, dev, test = split_corpus(self._corpus(43), (0.8, 0.1, 0.1), seed=7)
        assert (len(train), len(dev), len(test)) == (35, 4, 4)

    def test_deterministic_for_fixed_seed(self):
        c = self._corpus(20)
        first = split_corpus(c, (0.8, 0.1, 0.1), seed=3)
        second = split_corpus(c, (0.8, 0.1, 0.1), seed=3)
        for a, b in zip(first, second):
            assert [d.id for d in a.documents] == [d.id for d in b.documents]

    def test_too_few_documents(self):
        with pytest.raises(ValidationError):
            split_corpus(self._corpus(2), (0.8, 0.1, 0.1), seed=0)

    def test_bad_ratios(self):
        with pytest.raises(ValidationError):
            split_corpus(self._corpus(5), (0.8, 0.1, 0.2), seed=0)

    def test_already_split_rejected(self):
        c = self._corpus(5)
        c.split_tag = "train"
        with pytest.raises(ValidationError):
            split_corpus(c, (0.8, 0.1, 0.1), seed=0)

    @given(
        n=st.integers(min_value=3, max_value=60),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    @settings(max_examples=50, deadline=None)
    def test_partition_property(self, n, seed):
        corpus = self._corpus(n)
        parts = split_corpus(corpus, (0.8, 0.1, 0.1), seed=seed)
        ids = [set(d.id for d in p.documents) for p in parts]
        assert ids[0] | ids[1] | ids[2] == {d.id for d in corpus.documents}
        assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
        assert [p.split_tag for p in parts] == ["train", "dev", "test"]


class TestCorpusStats:
    def test_means(self):
        docs = [
            make_doc("a", [("H", None, 2), ("I", None, 3), ("J", None, 1)]),
            make_doc("b", [("H", None, 1)] * 4),
        ]
        stats = corpus_stats(Corpus(docs))
        assert stats.doc_count == 2
        assert stats.mean_sections_per_doc == 3.5
        assert stats.mean_paragraphs_per_doc == 5.0

    def test_means_match_independent_summation(self):
        rng = random.Random(11)
        docs = [
            make_doc(
                f"d{i}",
                [("H", None, rng.randint(1, 4)) for _ in range(rng.randint(1, 5))],
            )
            for i in range(25)
        ]
        stats = corpus_stats(Corpus(docs))
        sections = [len(d.sections) for d in docs]
        paragraphs = [sum(len(s.paragraphs) for s in d.sections) for d in docs]
        assert abs(stats.mean_sections_per_doc - sum(sections) / 25) < 1e-12
        assert abs(stats.mean_paragraphs_per_doc - sum(paragraphs) / 25) < 1e-12
        assert stats.mean_sections_per_doc >= 1
        assert stats.mean_paragraphs_per_doc >= 1

    def test_single_topic_histogram(self):
        docs = [
            make_doc("a", [("H", "privacy", 1), ("I", "privacy", 2)]),
            make_doc("b", [("H", "privacy", 1)]),
        ]
        stats = corpus_stats(Corpus(docs))
        assert stats.topic_histogram == {"privacy": 3}

    def test_unlabeled_under_sentinel(self):
        docs = [make_doc("a", [("H", "privacy", 1), ("I", None, 1)])]
        stats = corpus_stats(Corpus(docs))
        assert stats.topic_histogram == {"privacy": 1, "(unlabeled)": 1}

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValidationError):
            corpus_stats(Corpus([]))


class TestInvariants:
    def test_paragraph_indices_consecutive(self):
        from topseg.corpus import Paragraph, Section

        with pytest.raises(ValidationError):
            Section(
                heading_path=("H",),
                topic_id=None,
                paragraphs=(Paragraph("a", 0), Paragraph("b", 2)),
            )

    def test_document_requires_sections(self):
        with pytest.raises(ValidationError):
            Document(id="x", source_url=None, sections=())

    def test_empty_paragraph_text_rejected(self):
        with pytest.raises(ValidationError):
            section_from_texts(["H"], ["   "])
