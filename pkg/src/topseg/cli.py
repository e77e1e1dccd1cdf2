"""Pipeline command line: extract -> corpus -> topics -> split -> sample ->
train -> score/segment -> evaluate -> ensemble -> report.

Exit codes: 0 success, 1 usage error, 2 data validation error, 3 missing
upstream artifact. Defaults may come from a TOML config (--config); the
TOPSEG_SEED environment variable overrides config seeds, and flags override
both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import extract as extract_mod
from . import inference, metrics, sampling, scorers, stub, synth, topics

try:  # tomllib on 3.11+, tomli before that
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as _toml

from .errors import MissingArtifactError, TopsegError, ValidationError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_MISSING_ARTIFACT = 3

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: A003 - argparse API
        raise _UsageError(message)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise _UsageError(f"config file not found: {path}")
    with p.open("rb") as fh:
        data = _toml.load(fh)
    table = data.get("topseg", data)
    if not isinstance(table, dict):
        raise _UsageError("config must be a table of key = value pairs")
    return {str(k).replace("-", "_"): v for k, v in table.items()}


def _require(path: str, what: str, producer: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise MissingArtifactError(
            f"{what} not found at {path}; produce it with `topseg {producer}`",
            producer_stage=producer,
        )
    return p


def _packaged_aliases() -> Path:
    return Path(__file__).parent / "data" / "aliases.json"


def _single_seed(args: argparse.Namespace) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("TOPSEG_SEED")
    if env is not None:
        try:
            return int(env.replace(",", " ").split()[0])
        except ValueError as exc:
            raise _UsageError(f"bad TOPSEG_SEED value {env!r}") from exc
    return 0


# --- stages -------------------------------------------------------------------


def cmd_extract(args: argparse.Namespace) -> int:
    in_dir = Path(args.input_dir)
    if not in_dir.is_dir():
        raise MissingArtifactError(f"input directory not found: {in_dir}")
    corpus, skipped = extract_mod.extract_directory(
        in_dir,
        min_occurrences=args.min_occurrences,
        min_english_ratio=args.min_english_ratio,
    )
    corpus_mod.save_corpus(corpus, args.out)
    print(f"extract: wrote {len(corpus)} documents to {args.out}")
    for name, reason in skipped:
        print(f"extract: skipped {name}: {reason}")
    return EXIT_OK


def cmd_build_aliases(args: argparse.Namespace) -> int:
    corpus = corpus_mod.load_corpus(
        _require(args.corpus, "corpus", "extract")
    )
    candidates = topics.build_alias_candidates(corpus, min_count=args.min_count)
    lines = [json.dumps({"heading": h, "count": c}) for h, c in candidates]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""),
                                  encoding="utf-8")
        print(f"build-aliases: wrote {len(candidates)} candidates to {args.out}")
    else:
        for line in lines:
            print(line)
    return EXIT_OK


def cmd_assign_topics(args: argparse.Namespace) -> int:
    corpus = corpus_mod.load_corpus(_require(args.corpus, "corpus", "extract"))
    alias_path = Path(args.aliases) if args.aliases else _packaged_aliases()
    table = topics.load_alias_table(_require(str(alias_path), "alias table", "build-aliases"))
    labeled = topics.assign_topics(corpus, table)
    corpus_mod.save_corpus(labeled, args.out)
    print(
        f"assign-topics: kept {len(labeled)}/{len(corpus)} documents "
        f"({table.topic_count} topics) -> {args.out}"
    )
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    corpus = corpus_mod.load_corpus(_require(args.corpus, "corpus", "extract"))
    ratios = tuple(args.ratios)
    train, dev, test = corpus_mod.split_corpus(corpus, ratios, seed=_single_seed(args))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for part, name in ((train, "train"), (dev, "dev"), (test, "test")):
        corpus_mod.save_corpus(part, out_dir / f"{name}.jsonl")
    print(
        f"split: {len(train)}/{len(dev)}/{len(test)} documents -> {out_dir}/"
        "{train,dev,test}.jsonl"
    )
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    corpus = corpus_mod.load_corpus(_require(args.corpus, "corpus", "split"))
    if args.strategy in ("S", "RP"):
        unlabeled = any(
            sec.topic_id is None for doc in corpus.documents for sec in doc.sections
        )
        if unlabeled:
            raise MissingArtifactError(
                f"strategy {args.strategy} needs a topic-labeled corpus; "
                "run `topseg assign-topics` first",
                producer_stage="assign-topics",
            )
    cfg = sampling.SamplingConfig(
        strategy=args.strategy,
        positives_per_anchor=args.positives,
        negatives_per_anchor=args.negatives,
        seed=_single_seed(args),
    )
    result = sampling.sample_pairs(corpus, cfg)
    sampling.write_pairs(result.pairs, args.out)
    pos, neg = result.label_counts()
    print(
        f"sample: {len(result.pairs)} pairs ({pos} positive / {neg} negative, "
        f"{len(result.flagged)} flagged anchors) -> {args.out}"
    )
    if args.flags_out:
        sampling.write_flags(result.flagged, args.flags_out)
    return EXIT_OK


def _dedupe_chunks(pairs: list[sampling.PairExample]) -> list[sampling.Chunk]:
    seen: set = set()
    out: list[sampling.Chunk] = []
    for p in pairs:
        for chunk in (p.a, p.b):
            if chunk.key not in seen:
                seen.add(chunk.key)
                out.append(chunk)
    return out


def cmd_train(args: argparse.Namespace) -> int:
    pairs = sampling.read_pairs(_require(args.pairs, "pairs file", "sample"))
    feature_mode = "dense_concat" if args.scorer_kind == "glove_avg" else "sparse_sim"
    vocab = None
    table = None
    if args.scorer_kind in ("bow", "tfidf"):
        vocab = scorers.fit_vocabulary(
            _dedupe_chunks(pairs),
            use_idf=args.scorer_kind == "tfidf",
            min_df=args.min_df,
        )
    else:
        if not args.word_vectors:
            raise _UsageError("glove_avg training requires --word-vectors")
        table = scorers.load_word_vectors(
            _require(args.word_vectors, "word-vector file", "(external download)")
        )
    model = scorers.ScorerModel(
        kind=args.scorer_kind,
        feature_mode=feature_mode,
        vocabulary=vocab,
        word_vectors=table,
        token_budget=args.token_budget,
        name=args.name or args.scorer_kind,
    )
    hp = scorers.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, l2=args.l2, seed=_single_seed(args)
    )
    examples = scorers.featurize_pairs(model, pairs)
    model.head = scorers.train_logistic(examples, hp)
    scorers.save_model(model, args.out)
    print(
        f"train: {args.scorer_kind} on {len(pairs)} pairs, "
        f"final loss {model.head.training_meta['final_loss']:.4f} -> {args.out}"
    )
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    pairs_path = _require(args.pairs, "pairs file", "sample")
    if args.stub:
        count = stub.stub_score_file(pairs_path, args.out)
        print(f"score: stub scored {count} pairs -> {args.out}")
        return EXIT_OK
    if not args.model:
        raise _UsageError("score needs --model or --stub")
    model = scorers.load_model(_require(args.model, "model file", "train"))
    pairs = sampling.read_pairs(pairs_path)
    score_map = {p.pair_id: scorers.score_pair(model, p.a, p.b) for p in pairs}
    scorers.write_scores(score_map, args.out)
    accuracy = scorers.pair_accuracy(model, pairs, threshold=args.threshold)
    print(
        f"score: {len(pairs)} pairs with {model.name} "
        f"(labeled accuracy {accuracy:.4f}) -> {args.out}"
    )
    return EXIT_OK


def _adjacent_pair_records(doc: corpus_mod.Document):
    """Adjacent paragraph pairs with reference labels, for external scoring."""
    reference = inference.reference_segmentation(doc)
    flat = doc.paragraphs()
    for i, label in enumerate(reference.labels):
        si_a, pi_a, text_a = flat[i]
        si_b, pi_b, text_b = flat[i + 1]
        yield {
            "pair_id": f"CP-adj-{doc.id}-{i:05d}",
            "strategy": "CP",
            "label": label,
            "a": {"doc_id": doc.id, "section": si_a, "paragraph": pi_a, "text": text_a},
            "b": {"doc_id": doc.id, "section": si_b, "paragraph": pi_b, "text": text_b},
        }


def cmd_segment(args: argparse.Namespace) -> int:
    corpus = corpus_mod.load_corpus(_require(args.corpus, "corpus", "split"))
    if args.emit_pairs:
        with Path(args.emit_pairs).open("w", encoding="utf-8", newline="\n") as fh:
            count = 0
            for doc in corpus.documents:
                for rec in _adjacent_pair_records(doc):
                    fh.write(json.dumps(rec, ensure_ascii=False))
                    fh.write("\n")
                    count += 1
        print(f"segment: emitted {count} adjacent pairs -> {args.emit_pairs}")
        return EXIT_OK

    if not args.out:
        raise _UsageError("segment needs --out (or --emit-pairs)")
    segs: list[inference.Segmentation] = []
    if args.scores:
        if not args.pairs:
            raise _UsageError("--scores requires --pairs (the emitted adjacent pairs)")
        score_map = scorers.ingest_external_scores(
            _require(args.pairs, "adjacent-pairs file", "segment --emit-pairs"),
            _require(args.scores, "scores file", "score"),
        )
        scorer_name = args.scorer_name or "external"
        for doc in corpus.documents:
            probs = []
            for i in range(doc.paragraph_count - 1):
                pair_id = f"CP-adj-{doc.id}-{i:05d}"
                if pair_id not in score_map:
                    raise ValidationError(
                        f"scores file lacks {pair_id}; was --emit-pairs run on "
                        "this corpus?"
                    )
                probs.append(score_map[pair_id])
            segs.append(
                inference.segment_from_scores(
                    doc, probs, threshold=args.threshold, scorer=scorer_name,
                    seed=_single_seed(args),
                )
            )
    else:
        if not args.model:
            raise _UsageError("segment needs --model, --scores, or --emit-pairs")
        model = scorers.load_model(_require(args.model, "model file", "train"))
        cfg = inference.SegmenterConfig(scorer=model, threshold=args.threshold)
        for doc in corpus.documents:
            segs.append(inference.segment_document(doc, cfg, seed=_single_seed(args)))
    inference.write_segmentations(segs, args.out)
    print(f"segment: {len(segs)} documents -> {args.out}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    corpus = corpus_mod.load_corpus(_require(args.corpus, "corpus", "split"))
    seed = _single_seed(args)
    segs = [inference.random_oracle_segment(doc, seed) for doc in corpus.documents]
    inference.write_segmentations(segs, args.out)
    print(f"oracle: {len(segs)} documents (seed {seed}) -> {args.out}")
    return EXIT_OK


def cmd_ensemble(args: argparse.Namespace) -> int:
    runs_by_doc: dict[str, list[inference.Segmentation]] = {}
    doc_order: list[str] = []
    for path in args.inputs:
        for seg in inference.read_segmentations(
            _require(path, "segmentation file", "segment")
        ):
            if seg.doc_id not in runs_by_doc:
                runs_by_doc[seg.doc_id] = []
                doc_order.append(seg.doc_id)
            runs_by_doc[seg.doc_id].append(seg)
    expected = len(args.inputs)
    for doc_id, runs in runs_by_doc.items():
        if len(runs) != expected:
            raise ValidationError(
                f"{doc_id}: present in {len(runs)} of {expected} input files"
            )
    ensembles = [inference.ensemble_majority(runs_by_doc[d]) for d in doc_order]
    inference.write_segmentations(ensembles, args.out)
    print(f"ensemble: {len(ensembles)} documents from {expected} runs -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    corpus = corpus_mod.load_corpus(_require(args.corpus, "corpus", "split"))
    hypotheses = inference.read_segmentations(
        _require(args.segmentation, "segmentation file", "segment")
    )
    references = {
        doc.id: inference.reference_segmentation(doc) for doc in corpus.documents
    }
    report = metrics.evaluate_run(
        references,
        hypotheses,
        window_mode=args.window_mode,
        fixed_k=args.fixed_k,
        k_max=args.k_max,
    )
    metrics.save_report(report, args.out)
    print(
        f"evaluate: {len(report.per_doc)} documents, mean P_k {report.mean_pk:.4f} "
        f"(window {report.window_mode}, acc_0 {report.acc_curve[0]:.4f}) -> {args.out}"
    )
    if args.acc_csv:
        _write_acc_csv([report], args.acc_csv)
    return EXIT_OK


def _write_acc_csv(reports: list[metrics.EvalReport], path: str) -> None:
    lines = ["k,acc_k,scorer"]
    for rep in reports:
        for k, value in enumerate(rep.acc_curve):
            lines.append(f"{k},{value!r},{rep.scorer}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_report(args: argparse.Namespace) -> int:
    reports = [metrics.load_report(_require(p, "eval report", "evaluate"))
               for p in args.reports]
    groups: dict[str, list[metrics.EvalReport]] = {}
    for rep in reports:
        key = rep.scorer
        if key.startswith("ensemble("):
            key = f"{key} [ensemble]"
        groups.setdefault(key, []).append(rep)

    rows = []
    for name in sorted(groups):
        values = [r.mean_pk for r in groups[name]]
        rows.append(
            {
                "scorer": name,
                "runs": len(values),
                "mean_pk": sum(values) / len(values),
                "std_pk": metrics.sample_std(values),
                "window_mode": groups[name][0].window_mode,
            }
        )
    if args.format == "csv":
        out_lines = ["scorer,runs,mean_pk,std_pk,window_mode"]
        for r in rows:
            out_lines.append(
                f"{r['scorer']},{r['runs']},{r['mean_pk']!r},{r['std_pk']!r},"
                f"{r['window_mode']}"
            )
        text = "\n".join(out_lines)
    else:
        width = max(len(r["scorer"]) for r in rows)
        out_lines = [
            f"{'scorer':<{width}}  runs  P_k (mean +/- std)   window",
        ]
        for r in rows:
            out_lines.append(
                f"{r['scorer']:<{width}}  {r['runs']:>4}  "
                f"{r['mean_pk']:.4f} +/- {r['std_pk']:.4f}   {r['window_mode']}"
            )
        text = "\n".join(out_lines)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if args.acc_csv:
        ensembles = [r for r in reports if r.scorer.startswith("ensemble(")]
        _write_acc_csv(ensembles if ensembles else reports, args.acc_csv)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = synth.SynthConfig(
        n_docs=args.docs,
        n_topics=args.topics,
        topic_vocab_size=args.vocab_size,
        noise_vocab_size=args.noise_vocab_size,
        noise_rate=args.noise_rate,
        seed=_single_seed(args),
    )
    corpus = synth.make_synthetic_corpus(cfg)
    corpus_mod.save_corpus(corpus, args.out)
    stats = corpus_mod.corpus_stats(corpus)
    print(
        f"synth: {stats.doc_count} documents, "
        f"{stats.mean_sections_per_doc:.2f} sections/doc, "
        f"{stats.mean_paragraphs_per_doc:.2f} paragraphs/doc -> {args.out}"
    )
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = corpus_mod.load_corpus(_require(args.corpus, "corpus", "extract"))
    stats = corpus_mod.corpus_stats(corpus)
    print(json.dumps({
        "doc_count": stats.doc_count,
        "mean_sections_per_doc": stats.mean_sections_per_doc,
        "mean_paragraphs_per_doc": stats.mean_paragraphs_per_doc,
        "topic_histogram": stats.topic_histogram,
    }, indent=2))
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="topseg", description=__doc__)
    parser.add_argument("--config", help="TOML config supplying option defaults")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("extract", help="HTML directory -> corpus JSONL")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-occurrences", type=int, default=extract_mod.DEFAULT_MIN_OCCURRENCES)
    p.add_argument("--min-english-ratio", type=float, default=0.5)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("build-aliases", help="list frequent normalized headings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-count", type=int, default=topics.DEFAULT_MIN_ALIAS_COUNT)
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_aliases)

    p = sub.add_parser("assign-topics", help="apply the alias table to a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--aliases", help="alias JSON (default: bundled starter table)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assign_topics)

    p = sub.add_parser("split", help="deterministic train/dev/test split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ratios", type=float, nargs=3, default=[0.8, 0.1, 0.1])
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("sample", help="generate labeled pairs (S / RP / CP)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strategy", choices=sampling.STRATEGIES, required=True)
    p.add_argument("--positives", type=int, default=3)
    p.add_argument("--negatives", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--flags-out", help="sidecar JSONL of under-quota anchors")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="fit a pairwise scorer on labeled pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--scorer-kind", choices=("bow", "tfidf", "glove_avg"),
                   default="tfidf")
    p.add_argument("--word-vectors", help="GloVe-format vectors for glove_avg")
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--token-budget", type=int, default=scorers.PAIRED_TOKEN_BUDGET)
    p.add_argument("--seed", type=int)
    p.add_argument("--name", help="scorer name recorded in artifacts")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score a pairs file with a model or the stub")
    p.add_argument("--pairs", required=True)
    p.add_argument("--model")
    p.add_argument("--stub", action="store_true",
                   help="use the bundled deterministic hash scorer")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("segment", help="segment documents with a model or scores")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model")
    p.add_argument("--pairs", help="adjacent-pairs file (with --scores)")
    p.add_argument("--scores", help="external scores for the adjacent pairs")
    p.add_argument("--scorer-name", help="name recorded for external scores")
    p.add_argument("--emit-pairs", help="write the adjacent pairs for external scoring")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("oracle", help="informed random-oracle segmentations")
    p.add_argument("--corpus", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("ensemble", help="majority-vote over segmentation runs")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("evaluate", help="P_k / mistakes / acc_k for one run")
    p.add_argument("--corpus", required=True, help="reference corpus JSONL")
    p.add_argument("--segmentation", required=True)
    p.add_argument("--window-mode", choices=metrics.WINDOW_MODES,
                   default=metrics.DEFAULT_WINDOW_MODE)
    p.add_argument("--fixed-k", type=int)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--acc-csv", help="also write the acc_k curve as CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate eval reports into a table")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.add_argument("--acc-csv", help="acc_k curve CSV (ensemble rows when present)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a planted-topic synthetic corpus")
    p.add_argument("--docs", type=int, default=200)
    p.add_argument("--topics", type=int, default=5)
    p.add_argument("--vocab-size", type=int, default=50)
    p.add_argument("--noise-vocab-size", type=int, default=50)
    p.add_argument("--noise-rate", type=float, default=0.1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = _parse_with_config(parser, argv)
        if not getattr(args, "command", None):
            parser.print_help()
            return EXIT_USAGE
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MissingArtifactError as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except TopsegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT


def _parse_with_config(parser: _Parser, argv: list[str] | None) -> argparse.Namespace:
    """Two-phase parse: --config values become defaults, flags still win."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    config = _load_config(known.config)
    if config:
        for action in parser._subparsers._group_actions:  # noqa: SLF001
            for sub_parser in action.choices.values():
                applicable = {
                    k: v for k, v in config.items()
                    if any(opt.dest == k for opt in sub_parser._actions)  # noqa: SLF001
                }
                sub_parser.set_defaults(**applicable)
    return parser.parse_args(argv)


if __name__ == "__main__":
    sys.exit(main())
