"""Segmentation evaluation: P_k, explicit mistake counts, and the acc_k curve.

P_k follows the Beeferman formulation on paragraph units: for every position
i in [0, n-k) compare the same-segment indicator of paragraphs i and i+k
under reference and hypothesis; P_k is the disagreement fraction over the
n-k positions. Lower is better; identical segmentations give 0.

Two window conventions are implemented because "half the document length"
conflicts with the common half-average-segment convention; every report
names the mode it used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .inference import Segmentation, to_sections

WINDOW_MODES = ("half_avg_segment", "half_document", "fixed")
DEFAULT_WINDOW_MODE = "half_avg_segment"


@dataclass(frozen=True)
class EvalWindow:
    k: int
    mode: str = DEFAULT_WINDOW_MODE

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValidationError(f"window size must be >= 1, got {self.k}")
        if self.mode not in WINDOW_MODES:
            raise ValidationError(f"unknown window mode {self.mode!r}")


def default_window(
    reference: Segmentation, mode: str = DEFAULT_WINDOW_MODE, fixed_k: int | None = None
) -> int:
    """half_avg_segment: max(2, round-half-up(n / (2 * segments)));
    half_document: max(2, floor(n/2)); fixed: the configured k."""
    n = reference.paragraph_count
    if mode == "half_avg_segment":
        segments = reference.segment_count
        return max(2, int(n / (2 * segments) + 0.5))
    if mode == "half_document":
        return max(2, n // 2)
    if mode == "fixed":
        if fixed_k is None:
            raise ValidationError("fixed window mode requires an explicit k")
        return fixed_k
    raise ValidationError(f"unknown window mode {mode!r}")


def _segment_ids(seg: Segmentation) -> list[int]:
    ids = [0] * seg.paragraph_count
    for sid, (start, end) in enumerate(to_sections(seg)):
        for i in range(start, end + 1):
            ids[i] = sid
    return ids


def pk(reference: Segmentation, hypothesis: Segmentation, window: EvalWindow | int) -> float:
    """Disagreement rate of the same-segment indicator at distance k."""
    k = window.k if isinstance(window, EvalWindow) else window
    if len(reference.labels) != len(hypothesis.labels):
        raise ValidationError(
            f"length mismatch: reference {len(reference.labels)} vs "
            f"hypothesis {len(hypothesis.labels)}"
        )
    n = reference.paragraph_count
    if k < 1:
        raise ValidationError(f"window size must be >= 1, got {k}")
    if k >= n:
        raise ValidationError(f"window size {k} must be smaller than {n} paragraphs")
    ref_ids = _segment_ids(reference)
    hyp_ids = _segment_ids(hypothesis)
    disagreements = 0
    for i in range(n - k):
        same_ref = ref_ids[i] == ref_ids[i + k]
        same_hyp = hyp_ids[i] == hyp_ids[i + k]
        if same_ref != same_hyp:
            disagreements += 1
    return disagreements / (n - k)


def count_mistakes(reference: Segmentation, hypothesis: Segmentation) -> int:
    """Hamming distance between the two label vectors."""
    if len(reference.labels) != len(hypothesis.labels):
        raise ValidationError(
            f"length mismatch: reference {len(reference.labels)} vs "
            f"hypothesis {len(hypothesis.labels)}"
        )
    return sum(1 for r, h in zip(reference.labels, hypothesis.labels) if r != h)


def acc_k_curve(
    pairs: list[tuple[Segmentation, Segmentation]], k_max: int
) -> list[float]:
    """acc_k = fraction of documents with at most k label mistakes, k = 0..k_max.

    acc_0 is the exact-match (EM) rate. The curve is nondecreasing.
    """
    if not pairs:
        raise ValidationError("acc_k needs at least one (reference, hypothesis) pair")
    mistakes = [count_mistakes(ref, hyp) for ref, hyp in pairs]
    return [sum(1 for m in mistakes if m <= k) / len(mistakes) for k in range(k_max + 1)]


@dataclass(frozen=True)
class PerDocEval:
    doc_id: str
    p_k: float
    mistakes: int
    window_k: int


@dataclass
class EvalReport:
    scorer: str
    seed: int
    window_mode: str
    per_doc: list[PerDocEval]
    mean_pk: float
    acc_curve: list[float]
    skipped_docs: list[str] = field(default_factory=list)


def evaluate_run(
    references: dict[str, Segmentation],
    hypotheses: list[Segmentation],
    window_mode: str = DEFAULT_WINDOW_MODE,
    fixed_k: int | None = None,
    k_max: int = 10,
) -> EvalReport:
    """Per-document P_k and mistakes for one run, plus the aggregate curve.

    Documents too short for their window (k >= n) are skipped and listed.
    """
    if not hypotheses:
        raise ValidationError("no segmentations to evaluate")
    per_doc: list[PerDocEval] = []
    skipped: list[str] = []
    curve_pairs: list[tuple[Segmentation, Segmentation]] = []
    for hyp in hypotheses:
        ref = references.get(hyp.doc_id)
        if ref is None:
            raise ValidationError(f"no reference segmentation for {hyp.doc_id!r}")
        k = default_window(ref, window_mode, fixed_k)
        if k >= ref.paragraph_count:
            skipped.append(hyp.doc_id)
            continue
        per_doc.append(
            PerDocEval(hyp.doc_id, pk(ref, hyp, k), count_mistakes(ref, hyp), k)
        )
        curve_pairs.append((ref, hyp))
    if not per_doc:
        raise ValidationError("every document was too short for its evaluation window")
    mean_pk = sum(d.p_k for d in per_doc) / len(per_doc)
    scorers = {h.scorer for h in hypotheses}
    seeds = {h.seed for h in hypotheses}
    return EvalReport(
        scorer=scorers.pop() if len(scorers) == 1 else "+".join(sorted(scorers)),
        seed=seeds.pop() if len(seeds) == 1 else -1,
        window_mode=window_mode,
        per_doc=per_doc,
        mean_pk=mean_pk,
        acc_curve=acc_k_curve(curve_pairs, k_max),
        skipped_docs=skipped,
    )


def sample_std(values: list[float]) -> float:
    """Textbook sample standard deviation (ddof=1); 0.0 for a single value."""
    n = len(values)
    if n < 1:
        raise ValidationError("std of an empty sample")
    if n == 1:
        return 0.0
    mean = sum(values) / n
    return (sum((v - mean) ** 2 for v in values) / (n - 1)) ** 0.5


def report_to_dict(report: EvalReport) -> dict:
    return {
        "scorer": report.scorer,
        "seed": report.seed,
        "window_mode": report.window_mode,
        "mean_pk": report.mean_pk,
        "acc_curve": report.acc_curve,
        "skipped_docs": report.skipped_docs,
        "per_doc": [
            {"doc_id": d.doc_id, "p_k": d.p_k, "mistakes": d.mistakes,
             "window_k": d.window_k}
            for d in report.per_doc
        ],
    }


def save_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8"
    )


def load_report(path: str | Path) -> EvalReport:
    rec = json.loads(Path(path).read_text(encoding="utf-8"))
    return EvalReport(
        scorer=rec["scorer"],
        seed=rec["seed"],
        window_mode=rec["window_mode"],
        per_doc=[
            PerDocEval(d["doc_id"], d["p_k"], d["mistakes"], d["window_k"])
            for d in rec["per_doc"]
        ],
        mean_pk=rec["mean_pk"],
        acc_curve=rec["acc_curve"],
        skipped_docs=rec.get("skipped_docs", []),
    )
