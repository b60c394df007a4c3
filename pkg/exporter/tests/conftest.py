"""Offline fixtures: tiny word-embedding sentence encoders saved locally,
so no test ever reaches the network."""

from __future__ import annotations

import json
import warnings

import numpy as np
import pytest

VOCAB = ["alpha", "beta", "gamma", "delta", "epsilon",
         "zeta", "eta", "theta", "iota", "kappa"]
DIM = 8


def _build_encoder(out_dir: str, max_seq_length: int | None = None) -> str:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from sentence_transformers import SentenceTransformer
        from sentence_transformers.models import Pooling, WordEmbeddings
        from sentence_transformers.models.tokenizer import \
            WhitespaceTokenizer
    weights = np.random.default_rng(42).normal(
        size=(len(VOCAB), DIM)).astype(np.float32)
    tokenizer = WhitespaceTokenizer(vocab=VOCAB, stop_words=[],
                                    do_lower_case=True)
    kwargs = {}
    if max_seq_length is not None:
        kwargs["max_seq_length"] = max_seq_length
    word = WordEmbeddings(tokenizer=tokenizer, embedding_weights=weights,
                          **kwargs)
    model = SentenceTransformer(modules=[word, Pooling(DIM, "mean")])
    model.save(out_dir)
    return out_dir


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory):
    return _build_encoder(str(tmp_path_factory.mktemp("tiny_encoder")))


@pytest.fixture(scope="session")
def truncating_encoder_dir(tmp_path_factory):
    """Same encoder with a 3-token sequence limit."""
    return _build_encoder(str(tmp_path_factory.mktemp("tiny_trunc")),
                          max_seq_length=3)


def write_jsonl(path, rows) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return str(path)


@pytest.fixture()
def five_apps(tmp_path):
    """(dataset path, ids in file order); descriptions are in-vocab."""
    rows = [
        {"app_id": "app-a", "description": "alpha beta gamma",
         "api_calls": ["android.x.Api0"], "label": "benign"},
        {"app_id": "app-b", "description": "delta epsilon"},
        {"app_id": "app-c", "description": "zeta eta theta iota"},
        {"app_id": "app-d", "description": "kappa alpha"},
        {"app_id": "app-e", "description": "beta beta delta"},
    ]
    path = write_jsonl(tmp_path / "apps.jsonl", rows)
    return path, [r["app_id"] for r in rows]
