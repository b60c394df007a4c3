"""Session fixtures: the planted synthetic corpus and detectors trained on
it once, shared across test modules.  The full-size corpus mirrors the
calibrated detection suite (8 themes x 100 benign, 80 cross-theme
malicious, hashed embeddings dim 64 seed 7, nu 0.05); a smaller corpus
backs the CLI round trips.
"""

from __future__ import annotations

import os

import pytest

from topicguard import pipeline, synth
from topicguard.config import RunConfig, Variant
from topicguard.corpus import load_stopwords, tokenize_split, write_dataset
from topicguard.embedding import embed_docs, write_embeddings

EMB_DIM = 64
EMB_SEED = 7


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()


@pytest.fixture(scope="session")
def synth_corpus():
    """(train split, test split, app_id -> planted theme)."""
    return synth.generate_corpus(synth.SynthSpec())


@pytest.fixture(scope="session")
def synth_embeddings(synth_corpus, stopwords):
    train, test, _ = synth_corpus
    docs = tokenize_split(train, stopwords) + tokenize_split(test, stopwords)
    return embed_docs(docs, EMB_DIM, EMB_SEED)


@pytest.fixture(scope="session")
def run_config():
    return RunConfig(seed=0, nu=0.05)


@pytest.fixture(scope="session")
def bert_detector(synth_corpus, synth_embeddings, run_config):
    train, _, _ = synth_corpus
    return pipeline.train(Variant.BERTDETECT, train, synth_embeddings,
                          run_config)


@pytest.fixture(scope="session")
def ocsvm_only_detector(synth_corpus, run_config):
    train, _, _ = synth_corpus
    return pipeline.train(Variant.OCSVM_ONLY, train, None, run_config)


@pytest.fixture(scope="session")
def lda_detector(synth_corpus):
    """LDA variant sized to the planted themes; fewer sweeps for speed."""
    train, _, _ = synth_corpus
    cfg = RunConfig(seed=0, nu=0.05, n_topics=8, lda_iterations=300)
    return pipeline.train(Variant.LDA_ONLY, train, None, cfg)


@pytest.fixture(scope="session")
def small_corpus():
    """A 4-theme corpus small enough for repeated CLI runs."""
    spec = synth.SynthSpec(n_themes=4, benign_per_theme=35, n_malicious=20,
                           seed=99)
    return synth.generate_corpus(spec)


@pytest.fixture(scope="session")
def cli_workspace(tmp_path_factory, small_corpus, stopwords):
    """On-disk dataset + embedding files for CLI commands."""
    root = tmp_path_factory.mktemp("cli_data")
    train, test, _ = small_corpus
    train_path = os.path.join(root, "train.jsonl")
    test_path = os.path.join(root, "test.jsonl")
    write_dataset(train, train_path)
    write_dataset(test, test_path)
    docs = tokenize_split(train, stopwords) + tokenize_split(test, stopwords)
    emb = embed_docs(docs, EMB_DIM, EMB_SEED)
    emb_path = os.path.join(root, "emb.bin")
    # the test split repeats the benign train apps; the file wants unique ids
    unique_ids = dict.fromkeys(doc.app_id for doc in docs)
    write_embeddings(emb_path, EMB_DIM,
                     [(app_id, emb.vectors[app_id]) for app_id in unique_ids])
    return {"root": str(root), "train": train_path, "test": test_path,
            "embeddings": emb_path}
