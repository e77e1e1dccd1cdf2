from __future__ import annotations

import os
from pathlib import Path

import pytest

os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("HF_HUB_OFFLINE", "1")

FIXTURES = Path(__file__).parent / "fixtures"

# Whole-word vocabulary matching the planted fixture corpora.
PLANTED_WORDS = [f"topic{t}word{j}" for t in range(5) for j in range(50)] + [
    f"noiseword{j}" for j in range(50)
]


@pytest.fixture(scope="session")
def tiny_model(tmp_path_factory) -> Path:
    from stp_adapter.tiny import build_tiny_model

    out = tmp_path_factory.mktemp("model") / "tiny"
    return build_tiny_model(out, extra_words=PLANTED_WORDS, seed=0)
