"""Pairwise same-topic probability models.

Three built-in featurizers (bag-of-words counts, tf-idf, averaged word
vectors) feed a logistic head trained with binary cross-entropy by
full-batch gradient descent. High-dimensional sparse vectors use the
3-feature similarity mode (cosine, support jaccard, length ratio); dense
word-vector averages use the concatenation mode [u; v; |u-v|].

Externally produced scores enter through `ingest_external_scores`, which
validates the scores JSONL emitted by any out-of-process scorer against
the pairs file it was given.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .sampling import Chunk, PairExample

SCORER_KINDS = ("bow", "tfidf", "glove_avg", "external")
FEATURE_MODES = ("dense_concat", "sparse_sim")

# 512 suits single-encoder scoring; the paired default doubles it.
SINGLE_TOKEN_BUDGET = 512
PAIRED_TOKEN_BUDGET = 1024

_TOKEN_RE = re.compile(r"\w+(?:['’]\w+)*")


def tokenize(text: str) -> list[str]:
    """Case-folded Unicode word tokens; internal apostrophes survive."""
    return _TOKEN_RE.findall(text.casefold())


@dataclass
class Vocabulary:
    index: dict[str, int]
    idf: np.ndarray | None = None
    fitted_on: str = "train"

    def __post_init__(self) -> None:
        if sorted(self.index.values()) != list(range(len(self.index))):
            raise ValidationError("vocabulary indices must be contiguous from 0")
        if self.idf is not None and len(self.idf) != len(self.index):
            raise ValidationError("idf length must match vocabulary size")

    def __len__(self) -> int:
        return len(self.index)


def fit_vocabulary(
    train_chunks: list[Chunk], use_idf: bool, min_df: int = 1, fitted_on: str = "train"
) -> Vocabulary:
    """Index tokens with document frequency >= min_df over the training chunks.

    idf_t = ln((1+N)/(1+df_t)) + 1 with N = number of training chunks.
    """
    if not train_chunks:
        raise ValidationError("cannot fit a vocabulary on zero chunks")
    df: dict[str, int] = {}
    for chunk in train_chunks:
        for tok in set(tokenize(chunk.text)):
            df[tok] = df.get(tok, 0) + 1
    kept = sorted(t for t, c in df.items() if c >= min_df)
    index = {t: i for i, t in enumerate(kept)}
    idf = None
    if use_idf:
        n = len(train_chunks)
        idf = np.array(
            [math.log((1 + n) / (1 + df[t])) + 1.0 for t in kept], dtype=np.float64
        )
    return Vocabulary(index=index, idf=idf, fitted_on=fitted_on)


@dataclass
class WordVectorTable:
    vectors: dict[str, np.ndarray]
    dimension: int

    def __post_init__(self) -> None:
        for tok, vec in self.vectors.items():
            if vec.shape != (self.dimension,):
                raise ValidationError(
                    f"vector for {tok!r} has dimension {vec.shape}, expected {self.dimension}"
                )


def load_word_vectors(path: str | Path) -> WordVectorTable:
    """Read a GloVe-format text file: token then d floats per line."""
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            tok, values = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"{path.name}: line {lineno}: bad float: {exc}") from exc
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ParseError(
                    f"{path.name}: line {lineno}: dimension {len(vec)} != {dim}"
                )
            vectors[tok] = vec
    if dim is None:
        raise ParseError(f"{path.name}: no vectors found")
    return WordVectorTable(vectors=vectors, dimension=dim)


@dataclass(frozen=True)
class PairFeatures:
    values: np.ndarray
    mode: str


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    training_meta: dict

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)


@dataclass
class ScorerModel:
    kind: str  # one of SCORER_KINDS
    feature_mode: str
    vocabulary: Vocabulary | None = None
    word_vectors: WordVectorTable | None = None
    head: LogisticModel | None = None
    token_budget: int = PAIRED_TOKEN_BUDGET
    name: str = ""

    def __post_init__(self) -> None:
        if self.kind not in SCORER_KINDS:
            raise ValidationError(f"unknown scorer kind {self.kind!r}")
        if self.feature_mode not in FEATURE_MODES:
            raise ValidationError(f"unknown feature mode {self.feature_mode!r}")
        if not self.name:
            self.name = self.kind


def embed_tokens(tokens: list[str], model: ScorerModel) -> np.ndarray:
    if model.kind in ("bow", "tfidf"):
        vocab = model.vocabulary
        if vocab is None:
            raise ValidationError(f"{model.kind} scorer has no fitted vocabulary")
        vec = np.zeros(len(vocab), dtype=np.float64)
        for tok in tokens:
            idx = vocab.index.get(tok)
            if idx is not None:
                vec[idx] += 1.0
        if model.kind == "tfidf":
            if vocab.idf is None:
                raise ValidationError("tfidf scorer requires idf weights")
            vec *= vocab.idf
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec /= norm
        return vec
    if model.kind == "glove_avg":
        table = model.word_vectors
        if table is None:
            raise ValidationError("glove_avg scorer has no word vectors")
        rows = [table.vectors[t] for t in tokens if t in table.vectors]
        if not rows:
            return np.zeros(table.dimension, dtype=np.float64)
        return np.mean(rows, axis=0)
    raise ValidationError(f"scorer kind {model.kind!r} cannot embed locally")


def embed_chunk(chunk: Chunk, model: ScorerModel) -> np.ndarray:
    """bow -> raw counts; tfidf -> tf*idf L2-normalized (zero stays zero);
    glove_avg -> mean of in-vocabulary token vectors, zero vector if none."""
    return embed_tokens(tokenize(chunk.text), model)


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def pair_features(u: np.ndarray, v: np.ndarray, mode: str) -> PairFeatures:
    """dense_concat -> [u; v; |u-v|]; sparse_sim -> [cosine, support jaccard,
    L1-norm ratio]. Zero vectors: cosine 0, jaccard 0, ratio 0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if mode == "dense_concat":
        return PairFeatures(np.concatenate([u, v, np.abs(u - v)]), mode)
    if mode == "sparse_sim":
        su, sv = set(np.nonzero(u)[0].tolist()), set(np.nonzero(v)[0].tolist())
        union = len(su | sv)
        jaccard = len(su & sv) / union if union else 0.0
        lu, lv = float(np.abs(u).sum()), float(np.abs(v).sum())
        hi = max(lu, lv)
        ratio = min(lu, lv) / hi if hi > 0 else 0.0
        return PairFeatures(np.array([_cosine(u, v), jaccard, ratio]), mode)
    raise ValidationError(f"unknown feature mode {mode!r}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(
    weights: np.ndarray, bias: float, x: np.ndarray, y: np.ndarray, l2: float
) -> float:
    """Mean binary cross-entropy plus l2*||w||^2/2 (bias unregularized)."""
    z = x @ weights + bias
    per_example = (1 - y) * np.logaddexp(0.0, z) + y * np.logaddexp(0.0, -z)
    return float(per_example.mean() + l2 * float(weights @ weights) / 2.0)


def bce_gradient(
    weights: np.ndarray, bias: float, x: np.ndarray, y: np.ndarray, l2: float
) -> tuple[np.ndarray, float]:
    residual = _sigmoid(x @ weights + bias) - y
    grad_w = x.T @ residual / len(y) + l2 * weights
    grad_b = float(residual.mean())
    return grad_w, grad_b


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 500
    l2: float = 0.0
    seed: int = 0


def train_logistic(
    examples: list[tuple[PairFeatures, int]], hp: TrainConfig = TrainConfig()
) -> LogisticModel:
    """Full-batch gradient descent on mean BCE + l2 penalty.

    Weights start at zero, so runs are exactly reproducible; the seed is
    recorded in training_meta for provenance.
    """
    if len(examples) < 2:
        raise ValidationError("need at least 2 training examples")
    labels = {label for _, label in examples}
    if labels != {0, 1}:
        raise ValidationError(f"training needs both classes, got labels {sorted(labels)}")
    x = np.stack([f.values for f, _ in examples])
    y = np.array([label for _, label in examples], dtype=np.float64)
    weights = np.zeros(x.shape[1], dtype=np.float64)
    bias = 0.0
    for _ in range(hp.epochs):
        grad_w, grad_b = bce_gradient(weights, bias, x, y, hp.l2)
        weights -= hp.learning_rate * grad_w
        bias -= hp.learning_rate * grad_b
    return LogisticModel(
        weights=weights,
        bias=bias,
        training_meta={
            "epochs": hp.epochs,
            "learning_rate": hp.learning_rate,
            "l2": hp.l2,
            "seed": hp.seed,
            "final_loss": bce_loss(weights, bias, x, y, hp.l2),
        },
    )


def truncate_pair(
    tokens_a: list[str], tokens_b: list[str], budget: int
) -> tuple[list[str], list[str]]:
    """Iterative truncation: while over budget, drop the last token of the
    currently longer list (ties drop from the first)."""
    if budget < 2:
        raise ValidationError(f"token budget must be >= 2, got {budget}")
    la, lb = len(tokens_a), len(tokens_b)
    while la + lb > budget:
        if la >= lb:
            la -= 1
        else:
            lb -= 1
    return tokens_a[:la], tokens_b[:lb]


def score_features(model: ScorerModel, features: PairFeatures) -> float:
    if model.head is None:
        raise ValidationError("scorer has no trained logistic head")
    z = float(features.values @ model.head.weights + model.head.bias)
    return float(_sigmoid(np.array([z]))[0])


def score_pair(model: ScorerModel, a: Chunk, b: Chunk) -> float:
    """Truncate, embed, featurize, squash: probability the two chunks share a topic."""
    ta, tb = truncate_pair(tokenize(a.text), tokenize(b.text), model.token_budget)
    u, v = embed_tokens(ta, model), embed_tokens(tb, model)
    return score_features(model, pair_features(u, v, model.feature_mode))


def featurize_pairs(
    model: ScorerModel, pairs: list[PairExample]
) -> list[tuple[PairFeatures, int]]:
    out = []
    for p in pairs:
        ta, tb = truncate_pair(tokenize(p.a.text), tokenize(p.b.text), model.token_budget)
        feats = pair_features(embed_tokens(ta, model), embed_tokens(tb, model),
                              model.feature_mode)
        out.append((feats, p.label))
    return out


def pair_accuracy(
    model: ScorerModel, pairs: list[PairExample], threshold: float = 0.5
) -> float:
    """Fraction of labeled pairs whose thresholded score matches the label."""
    if not pairs:
        raise ValidationError("no pairs to evaluate")
    hits = 0
    for p in pairs:
        pred = 1 if score_pair(model, p.a, p.b) >= threshold else 0
        hits += int(pred == p.label)
    return hits / len(pairs)


def ingest_external_scores(
    pairs_file: str | Path, scores_file: str | Path
) -> dict[str, float]:
    """Validate a scores JSONL against its pairs file: exact id bijection,
    probabilities within [0,1]."""
    pairs_file, scores_file = Path(pairs_file), Path(scores_file)
    wanted: list[str] = []
    with pairs_file.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                wanted.append(json.loads(line)["pair_id"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise ParseError(
                    f"{pairs_file.name}: line {lineno}: bad pair record: {exc}"
                ) from exc
    wanted_set = set(wanted)
    scores: dict[str, float] = {}
    with scores_file.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pair_id, prob = rec["pair_id"], float(rec["prob"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(
                    f"{scores_file.name}: line {lineno}: bad score record: {exc}"
                ) from exc
            if pair_id in scores:
                raise ValidationError(
                    f"{scores_file.name}: line {lineno}: duplicate pair_id {pair_id!r}"
                )
            if pair_id not in wanted_set:
                raise ValidationError(
                    f"{scores_file.name}: line {lineno}: unknown pair_id {pair_id!r}"
                )
            if not 0.0 <= prob <= 1.0:
                raise ValidationError(
                    f"{scores_file.name}: line {lineno}: prob {prob} outside [0, 1]"
                )
            scores[pair_id] = prob
    missing = [pid for pid in wanted if pid not in scores]
    if missing:
        shown = ", ".join(missing[:10]) + ("..." if len(missing) > 10 else "")
        raise ValidationError(f"{len(missing)} pair ids missing from scores: {shown}")
    return scores


def write_scores(scores: dict[str, float], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for pair_id, prob in scores.items():
            fh.write(json.dumps({"pair_id": pair_id, "prob": prob}))
            fh.write("\n")


# --- model persistence (versioned JSON dump) -------------------------------

MODEL_FORMAT_VERSION = 1


def save_model(model: ScorerModel, path: str | Path) -> None:
    rec: dict = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "feature_mode": model.feature_mode,
        "token_budget": model.token_budget,
        "name": model.name,
    }
    if model.vocabulary is not None:
        tokens = sorted(model.vocabulary.index, key=model.vocabulary.index.get)
        rec["vocabulary"] = {
            "tokens": tokens,
            "idf": None if model.vocabulary.idf is None else model.vocabulary.idf.tolist(),
            "fitted_on": model.vocabulary.fitted_on,
        }
    if model.word_vectors is not None:
        toks = sorted(model.word_vectors.vectors)
        rec["word_vectors"] = {
            "dimension": model.word_vectors.dimension,
            "tokens": toks,
            "matrix": [model.word_vectors.vectors[t].tolist() for t in toks],
        }
    if model.head is not None:
        rec["head"] = {
            "weights": model.head.weights.tolist(),
            "bias": model.head.bias,
            "training_meta": model.head.training_meta,
        }
    Path(path).write_text(json.dumps(rec), encoding="utf-8")


def load_model(path: str | Path) -> ScorerModel:
    path = Path(path)
    rec = json.loads(path.read_text(encoding="utf-8"))
    if rec.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValidationError(
            f"{path.name}: unsupported model format {rec.get('format_version')!r}"
        )
    vocab = None
    if "vocabulary" in rec:
        v = rec["vocabulary"]
        vocab = Vocabulary(
            index={t: i for i, t in enumerate(v["tokens"])},
            idf=None if v["idf"] is None else np.array(v["idf"], dtype=np.float64),
            fitted_on=v.get("fitted_on", "train"),
        )
    table = None
    if "word_vectors" in rec:
        w = rec["word_vectors"]
        table = WordVectorTable(
            vectors={
                t: np.array(row, dtype=np.float64)
                for t, row in zip(w["tokens"], w["matrix"])
            },
            dimension=w["dimension"],
        )
    head = None
    if "head" in rec:
        h = rec["head"]
        head = LogisticModel(
            weights=np.array(h["weights"], dtype=np.float64),
            bias=h["bias"],
            training_meta=h["training_meta"],
        )
    return ScorerModel(
        kind=rec["kind"],
        feature_mode=rec["feature_mode"],
        vocabulary=vocab,
        word_vectors=table,
        head=head,
        token_budget=rec["token_budget"],
        name=rec.get("name", rec["kind"]),
    )
