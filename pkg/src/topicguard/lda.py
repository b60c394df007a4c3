"""Latent Dirichlet Allocation by collapsed Gibbs sampling.

Training resamples every token's topic from the full conditional
``p(z=k) ~ (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta)`` where n_dk is
the doc-topic count, n_kw the topic-word count, and n_k the topic total,
all excluding the token being resampled.  New documents are folded in by
the same sweep with the topic-word counts frozen.  The topic affinity of a
document is its smoothed topic mixture ``(n_dk + alpha) / (len + K*alpha)``.

Sampling runs in a numba kernel with its own seeded RNG stream, so two
runs with equal seeds produce identical count matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .corpus import TokenizedDoc
from .errors import ConfigError, DataError


@dataclass
class LdaModel:
    n_topics: int
    alpha: float
    beta: float
    vocab: tuple[str, ...]
    topic_word: np.ndarray
    topic_totals: np.ndarray
    doc_topic: np.ndarray
    doc_ids: tuple[str, ...]
    iterations: int
    seed: int
    skipped_docs: tuple[str, ...] = ()
    vocab_index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.vocab_index:
            self.vocab_index = {w: i for i, w in enumerate(self.vocab)}


@njit(cache=True)
def _gibbs_train(doc_of, word_of, n_docs, n_topics, n_vocab, alpha, beta,
                 iterations, seed):
    np.random.seed(seed)
    n_tokens = word_of.shape[0]
    z = np.empty(n_tokens, dtype=np.int64)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_kw = np.zeros((n_topics, n_vocab), dtype=np.int64)
    n_k = np.zeros(n_topics, dtype=np.int64)
    for t in range(n_tokens):
        k = np.random.randint(0, n_topics)
        z[t] = k
        n_dk[doc_of[t], k] += 1
        n_kw[k, word_of[t]] += 1
        n_k[k] += 1
    cum = np.empty(n_topics, dtype=np.float64)
    for _ in range(iterations):
        for t in range(n_tokens):
            d = doc_of[t]
            w = word_of[t]
            k = z[t]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1
            total = 0.0
            for kk in range(n_topics):
                total += (n_dk[d, kk] + alpha) * (n_kw[kk, w] + beta) / (
                    n_k[kk] + n_vocab * beta)
                cum[kk] = total
            u = np.random.random() * total
            k = 0
            while k < n_topics - 1 and cum[k] <= u:
                k += 1
            z[t] = k
            n_dk[d, k] += 1
            n_kw[k, w] += 1
            n_k[k] += 1
    return z, n_dk, n_kw, n_k


@njit(cache=True)
def _gibbs_fold_in(word_of, n_topics, n_kw, n_k, n_vocab, alpha, beta,
                   iterations, seed):
    """Resample one document against frozen topic-word counts."""
    np.random.seed(seed)
    n_tokens = word_of.shape[0]
    z = np.empty(n_tokens, dtype=np.int64)
    local_dk = np.zeros(n_topics, dtype=np.int64)
    for t in range(n_tokens):
        k = np.random.randint(0, n_topics)
        z[t] = k
        local_dk[k] += 1
    cum = np.empty(n_topics, dtype=np.float64)
    for _ in range(iterations):
        for t in range(n_tokens):
            w = word_of[t]
            k = z[t]
            local_dk[k] -= 1
            total = 0.0
            for kk in range(n_topics):
                total += (local_dk[kk] + alpha) * (n_kw[kk, w] + beta) / (
                    n_k[kk] + n_vocab * beta)
                cum[kk] = total
            u = np.random.random() * total
            k = 0
            while k < n_topics - 1 and cum[k] <= u:
                k += 1
            z[t] = k
            local_dk[k] += 1
    return local_dk


def _conditional_checked(n_dk_row, n_kw_col, n_k, alpha, beta, n_vocab):
    """Reference full conditional with positivity/normalization asserts."""
    p = (n_dk_row + alpha) * (n_kw_col + beta) / (n_k + n_vocab * beta)
    assert np.all(p > 0.0), "full conditional has a non-positive entry"
    p = p / p.sum()
    assert abs(float(p.sum()) - 1.0) <= 1e-12, "conditional not normalized"
    return p


def _gibbs_train_checked(doc_of, word_of, n_docs, n_topics, n_vocab, alpha,
                         beta, iterations, seed):
    """Pure-python sweep that asserts conditional validity at every step.

    Test-only path; slower than the kernel and on a different RNG stream.
    """
    rng = np.random.default_rng(seed)
    n_tokens = word_of.shape[0]
    z = rng.integers(0, n_topics, size=n_tokens)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_kw = np.zeros((n_topics, n_vocab), dtype=np.int64)
    n_k = np.zeros(n_topics, dtype=np.int64)
    for t in range(n_tokens):
        n_dk[doc_of[t], z[t]] += 1
        n_kw[z[t], word_of[t]] += 1
        n_k[z[t]] += 1
    for _ in range(iterations):
        for t in range(n_tokens):
            d, w, k = doc_of[t], word_of[t], z[t]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1
            p = _conditional_checked(n_dk[d], n_kw[:, w], n_k, alpha, beta,
                                     n_vocab)
            k = int(rng.choice(n_topics, p=p))
            z[t] = k
            n_dk[d, k] += 1
            n_kw[k, w] += 1
            n_k[k] += 1
    return z, n_dk, n_kw, n_k


def fit_lda(docs: list[TokenizedDoc], n_topics: int,
            alpha: float | None = None, beta: float = 0.01,
            iterations: int = 1000, seed: int = 0,
            check_conditionals: bool = False) -> LdaModel:
    """Train on the non-empty documents; empty ones are recorded and skipped.

    alpha defaults to 50 / n_topics.  The vocabulary is the sorted union of
    tokens in the kept documents.
    """
    if n_topics < 1:
        raise ConfigError(f"n_topics must be >= 1, got {n_topics}")
    if iterations < 1:
        raise ConfigError("iterations must be >= 1")
    if alpha is None:
        alpha = 50.0 / n_topics
    if alpha <= 0.0 or beta <= 0.0:
        raise ConfigError("alpha and beta must be positive")
    kept = [d for d in docs if d.tokens]
    skipped = tuple(d.app_id for d in docs if not d.tokens)
    if not kept:
        raise DataError("every document is empty after tokenization")
    vocab = tuple(sorted({tok for d in kept for tok in d.tokens}))
    index = {w: i for i, w in enumerate(vocab)}
    doc_of = np.concatenate([
        np.full(len(d.tokens), i, dtype=np.int64)
        for i, d in enumerate(kept)])
    word_of = np.concatenate([
        np.array([index[t] for t in d.tokens], dtype=np.int64)
        for d in kept])
    trainer = _gibbs_train_checked if check_conditionals else _gibbs_train
    _, n_dk, n_kw, n_k = trainer(doc_of, word_of, len(kept), n_topics,
                                 len(vocab), float(alpha), float(beta),
                                 iterations, seed % (2 ** 32 - 1))
    return LdaModel(n_topics=n_topics, alpha=float(alpha), beta=float(beta),
                    vocab=vocab, topic_word=n_kw, topic_totals=n_k,
                    doc_topic=n_dk, doc_ids=tuple(d.app_id for d in kept),
                    iterations=iterations, seed=seed, skipped_docs=skipped,
                    vocab_index=index)


def mixture_from_counts(counts: np.ndarray, alpha: float) -> np.ndarray:
    """Smoothed topic mixture (n_dk + alpha) / (len + K*alpha)."""
    counts = np.asarray(counts, dtype=np.float64)
    return (counts + alpha) / (counts.sum() + counts.shape[0] * alpha)


def fold_in_document(model: LdaModel, doc: TokenizedDoc,
                     iterations: int = 100, seed: int = 0) -> np.ndarray:
    """Topic affinity of a new document under frozen topics.

    Tokens outside the training vocabulary are dropped.  A document with no
    known tokens gets the uniform mixture 1/K.
    """
    word_ids = np.array([model.vocab_index[t] for t in doc.tokens
                         if t in model.vocab_index], dtype=np.int64)
    if word_ids.size == 0:
        return np.full(model.n_topics, 1.0 / model.n_topics)
    local_dk = _gibbs_fold_in(word_ids, model.n_topics, model.topic_word,
                              model.topic_totals, len(model.vocab),
                              model.alpha, model.beta, iterations,
                              seed % (2 ** 32 - 1))
    return mixture_from_counts(local_dk, model.alpha)


def doc_topic_affinities(model: LdaModel) -> np.ndarray:
    """Training-document mixtures from the stored count matrix."""
    out = np.empty((model.doc_topic.shape[0], model.n_topics))
    for i in range(model.doc_topic.shape[0]):
        out[i] = mixture_from_counts(model.doc_topic[i], model.alpha)
    return out


def lda_top_words(model: LdaModel, topic: int, n_words: int = 10
                  ) -> list[str]:
    """Highest-count words for one topic; count ties break alphabetically."""
    if not 0 <= topic < model.n_topics:
        raise ValueError(f"topic {topic} out of range")
    counts = model.topic_word[topic]
    order = sorted(range(len(model.vocab)),
                   key=lambda w: (-counts[w], model.vocab[w]))
    return [model.vocab[w] for w in order[:n_words]]
