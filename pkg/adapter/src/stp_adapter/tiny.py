"""Builder for a small self-contained encoder usable on offline machines.

Produces a standard model directory (config, weights, tokenizer) that
AutoModel/AutoTokenizer load from disk: a 2-layer BERT with a WordPiece
vocabulary of single characters plus any caller-supplied whole words.
Weights are randomly initialized from a fixed seed, so the artifact is
deterministic; fine-tuning gives it task behavior.
"""

from __future__ import annotations

import string
from pathlib import Path

import torch

SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")


def build_tiny_model(
    out_dir: str | Path,
    extra_words: list[str] | None = None,
    hidden_size: int = 32,
    num_layers: int = 2,
    num_heads: int = 2,
    max_length: int = 256,
    seed: int = 0,
) -> Path:
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.normalizers import NFD, Lowercase, Sequence, StripAccents
    from tokenizers.pre_tokenizers import Whitespace
    from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    chars = list(string.ascii_lowercase + string.digits)
    pieces = chars + [f"##{c}" for c in chars]
    words = sorted({w.lower() for w in (extra_words or [])})
    vocab = {tok: i for i, tok in enumerate([*SPECIALS, *pieces, *words])}

    backend = Tokenizer(WordPiece(vocab=vocab, unk_token="[UNK]",
                                  max_input_chars_per_word=64))
    backend.normalizer = Sequence([NFD(), Lowercase(), StripAccents()])
    backend.pre_tokenizer = Whitespace()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]",
        model_max_length=max_length,
    )

    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=hidden_size * 2,
        max_position_embeddings=max_length,
    )
    BertModel(config).save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return out_dir
