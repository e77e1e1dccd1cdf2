"""stp-adapter: score pair files with a sentence encoder, or fine-tune one.

Score-only mode works with any local model directory or hub id; the
fine-tune capability degrades gracefully when its dependencies are
missing. Exit codes: 0 success, 1 usage error, 2 data or model error.
"""

from __future__ import annotations

import argparse
import sys

from .io import AdapterError, read_pairs, write_scores


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: A003 - argparse API
        raise _UsageError(message)


def cmd_score(args: argparse.Namespace) -> int:
    from .encoder import AdapterConfig, PairScorer

    records = read_pairs(args.pairs)
    scorer = PairScorer(AdapterConfig(
        model=args.model,
        batch_size=args.batch_size,
        device=args.device,
        mode=args.mode,
        token_budget=args.token_budget,
    ))
    scored = scorer.score_records(records)
    write_scores(scored, args.out)
    print(f"score: {len(scored)} pairs with {args.model} -> {args.out}")
    return 0


def cmd_finetune(args: argparse.Namespace) -> int:
    try:
        from .finetune import FinetuneConfig, run_finetune
    except ImportError as exc:
        print(
            f"finetune capability unavailable ({exc}); score-only mode still works",
            file=sys.stderr,
        )
        return 2
    result = run_finetune(
        args.train,
        args.dev,
        args.out,
        FinetuneConfig(
            model=args.model,
            mode=args.mode,
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.lr,
            seed=args.seed,
            device=args.device,
            token_budget=args.token_budget,
        ),
    )
    print(f"finetune: dev accuracy {result['dev_accuracy']:.4f} -> {result['out_dir']}")
    return 0


def cmd_init_tiny(args: argparse.Namespace) -> int:
    from .tiny import build_tiny_model

    words = []
    if args.words_from:
        for rec in read_pairs(args.words_from):
            words.extend(rec.text_a.split())
            words.extend(rec.text_b.split())
    words.extend(args.words or [])
    out = build_tiny_model(args.out, extra_words=words, seed=args.seed)
    print(f"init-tiny: wrote encoder to {out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="stp-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("score", help="pairs JSONL -> scores JSONL")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", required=True, help="model directory or hub id")
    p.add_argument("--mode", choices=("siamese", "cross"), default="siamese")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.add_argument("--token-budget", type=int)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("finetune", help="BCE pair-classification fine-tune")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--mode", choices=("siamese", "cross"), default="siamese")
    p.add_argument("--epochs", type=int, default=8)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--device", default="cpu")
    p.add_argument("--token-budget", type=int)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("init-tiny", help="build a small offline encoder directory")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--words", nargs="*", help="extra whole-word vocabulary entries")
    p.add_argument("--words-from", help="pairs JSONL whose texts seed the vocabulary")
    p.set_defaults(func=cmd_init_tiny)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help()
            return 1
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
