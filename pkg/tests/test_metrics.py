from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topseg.errors import ValidationError
from topseg.inference import Segmentation
from topseg.metrics import (
    EvalWindow,
    acc_k_curve,
    count_mistakes,
    default_window,
    evaluate_run,
    pk,
    sample_std,
)

from oracles import pk_oracle

label_vectors = st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=29)


def seg(labels, doc_id="d"):
    return Segmentation(doc_id=doc_id, labels=tuple(labels))


class TestPk:
    def test_identity_is_zero(self):
        s = seg([1, 0, 1, 1, 0])
        assert pk(s, s, 2) == 0.0

    def test_two_equal_segments_vs_all_same(self):
        # Oracle-derived: every (i, i+3) pair crosses the midpoint boundary
        # in the reference but never in the all-same hypothesis.
        ref, hyp = [1, 1, 0, 1, 1], [1, 1, 1, 1, 1]
        expected = pk_oracle(ref, hyp, 3)
        assert expected == 1.0
        assert pk(seg(ref), seg(hyp), 3) == expected

    def test_complement_hypothesis_positive_at_default_window(self):
        ref, hyp = [1, 1, 0, 1, 1], [0, 0, 1, 0, 0]
        k = default_window(seg(ref), "half_avg_segment")  # n=6, 2 segments -> 2
        assert k == 2
        expected = pk_oracle(ref, hyp, k)
        assert expected == 0.5
        assert pk(seg(ref), seg(hyp), k) == expected

    def test_window_too_large_rejected(self):
        s = seg([1, 0, 1])
        with pytest.raises(ValidationError):
            pk(s, s, 4)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            pk(seg([1, 0]), seg([1, 0, 1]), 1)

    def test_accepts_eval_window(self):
        s = seg([1, 0, 1, 1, 0])
        assert pk(s, s, EvalWindow(k=2)) == 0.0

    @given(
        data=st.tuples(label_vectors, st.integers(min_value=0, max_value=10**6)),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_oracle(self, data):
        labels, salt = data
        rng = random.Random(salt)
        ref = labels
        hyp = [rng.randint(0, 1) for _ in labels]
        n = len(labels) + 1
        k = rng.randint(1, n - 1)
        assert pk(seg(ref), seg(hyp), k) == pk_oracle(ref, hyp, k)


class TestDefaultWindow:
    def test_half_avg_segment_rounds_half_up(self):
        # n=20, 4 segments: 20 / 8 = 2.5 rounds up to 3
        labels = [1, 1, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1]
        reference = seg(labels)
        assert reference.paragraph_count == 20
        assert reference.segment_count == 4
        assert default_window(reference, "half_avg_segment") == 3

    def test_half_document(self):
        reference = seg([1] * 19)
        assert default_window(reference, "half_document") == 10

    def test_floor_clamp(self):
        # n=3, 3 segments: round(0.5) -> 1, clamped to 2
        reference = seg([0, 0])
        assert default_window(reference, "half_avg_segment") == 2

    def test_fixed_requires_k(self):
        reference = seg([1, 1])
        assert default_window(reference, "fixed", fixed_k=4) == 4
        with pytest.raises(ValidationError):
            default_window(reference, "fixed")


class TestCountMistakes:
    def test_single_flip(self):
        assert count_mistakes(seg([1, 0, 1]), seg([1, 1, 1])) == 1

    def test_identical(self):
        assert count_mistakes(seg([1, 0]), seg([1, 0])) == 0

    def test_all_different(self):
        assert count_mistakes(seg([0, 0]), seg([1, 1])) == 2

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            count_mistakes(seg([1]), seg([1, 0]))

    @given(label_vectors, st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=100, deadline=None)
    def test_symmetry(self, labels, salt):
        rng = random.Random(salt)
        other = [rng.randint(0, 1) for _ in labels]
        assert count_mistakes(seg(labels), seg(other)) == count_mistakes(
            seg(other), seg(labels)
        )


class TestAccCurve:
    def test_counting_example(self):
        refs = [seg([1, 1, 1, 1], doc_id=f"d{i}") for i in range(3)]
        hyps = [
            seg([1, 1, 1, 1], doc_id="d0"),  # 0 mistakes
            seg([0, 1, 1, 1], doc_id="d1"),  # 1 mistake
            seg([0, 0, 0, 1], doc_id="d2"),  # 3 mistakes
        ]
        curve = acc_k_curve(list(zip(refs, hyps)), k_max=3)
        assert curve == [1 / 3, 2 / 3, 2 / 3, 1.0]

    def test_acc0_is_exact_match_rate(self):
        rng = random.Random(5)
        pairs = []
        exact = 0
        for i in range(50):
            n = rng.randint(2, 8)
            ref = [rng.randint(0, 1) for _ in range(n)]
            hyp = [rng.randint(0, 1) for _ in range(n)]
            exact += ref == hyp
            pairs.append((seg(ref, f"d{i}"), seg(hyp, f"d{i}")))
        curve = acc_k_curve(pairs, k_max=8)
        assert curve[0] == exact / 50

    def test_nondecreasing_and_reaches_one(self):
        rng = random.Random(6)
        pairs = []
        for i in range(20):
            ref = [rng.randint(0, 1) for _ in range(7)]
            hyp = [rng.randint(0, 1) for _ in range(7)]
            pairs.append((seg(ref, f"d{i}"), seg(hyp, f"d{i}")))
        curve = acc_k_curve(pairs, k_max=7)
        assert all(a <= b for a, b in zip(curve, curve[1:]))
        assert curve[7] == 1.0  # n-1 = 7 mistakes is the maximum possible


class TestAggregate:
    def test_sample_std_matches_textbook(self):
        values = [0.12, 0.18, 0.15, 0.11, 0.19]
        mean = sum(values) / 5
        expected = (sum((v - mean) ** 2 for v in values) / 4) ** 0.5
        assert abs(sample_std(values) - expected) < 1e-15

    def test_sample_std_single_value(self):
        assert sample_std([0.4]) == 0.0

    def test_evaluate_run_skips_short_documents(self):
        references = {
            "big": seg([1, 0, 1, 1, 0, 1, 1], doc_id="big"),
            "tiny": seg([1], doc_id="tiny"),  # n=2; window 2 >= n, skipped
        }
        hyps = [
            seg([1, 0, 1, 1, 0, 1, 1], doc_id="big"),
            seg([0], doc_id="tiny"),
        ]
        report = evaluate_run(references, hyps, window_mode="half_document", k_max=3)
        assert report.skipped_docs == ["tiny"]
        assert [d.doc_id for d in report.per_doc] == ["big"]
        assert report.mean_pk == 0.0
        assert report.window_mode == "half_document"
