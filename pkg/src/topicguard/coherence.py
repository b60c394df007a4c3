"""Topic coherence: NPMI and a cosine-of-context-vectors measure (Cv).

Both measures read probabilities off boolean sliding windows over the
tokenized reference corpus: a word (or pair) counts once per window that
contains it, and P(.) = windows containing / total windows.  NPMI for a
pair is ``log((P_ij + eps) / (P_i * P_j)) / (-log(P_ij + eps))``; a topic's
NPMI is the mean over its unordered term pairs.  Cv builds, for each topic
term, the vector of NPMI values against every term of the topic (self pairs
use P(w,w) = P(w)), then averages the cosine similarity between each term
vector and the elementwise sum vector, mapped affinely from [-1, 1] to
[0, 1].

Windows slide one token at a time; a document shorter than the window
contributes exactly one window.  Documents with no tokens contribute no
windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .corpus import TokenizedDoc

DEFAULT_EPS = 1e-12


@dataclass
class CooccurrenceTable:
    """Window counts for words and unordered word pairs.

    When ``restricted`` is set, only those words were counted; querying any
    other word takes the missing-word path (probability eps).
    """

    window_size: int
    total_windows: int
    word_counts: dict[str, int]
    pair_counts: dict[tuple[str, str], int]
    restricted: frozenset[str] | None = None


@dataclass
class TopicWordSet:
    topic_id: int
    words: tuple[str, ...]


@dataclass
class CoherenceScore:
    topic_id: int
    npmi: float
    cv: float


def count_cooccurrences(docs: list[TokenizedDoc], window_size: int,
                        restrict: frozenset[str] | None = None
                        ) -> CooccurrenceTable:
    """Slide boolean windows over every document and count memberships."""
    if window_size < 2:
        raise ValueError("window_size must be >= 2")
    word_counts: dict[str, int] = {}
    pair_counts: dict[tuple[str, str], int] = {}
    total = 0
    for doc in docs:
        tokens = doc.tokens
        n = len(tokens)
        if n == 0:
            continue
        n_windows = max(1, n - window_size + 1)
        total += n_windows
        for start in range(n_windows):
            window = set(tokens[start:start + window_size])
            if restrict is not None:
                window &= restrict
            for w in window:
                word_counts[w] = word_counts.get(w, 0) + 1
            for u, v in combinations(sorted(window), 2):
                pair_counts[(u, v)] = pair_counts.get((u, v), 0) + 1
    return CooccurrenceTable(window_size=window_size, total_windows=total,
                             word_counts=word_counts,
                             pair_counts=pair_counts, restricted=restrict)


def npmi_pair(w1: str, w2: str, table: CooccurrenceTable,
              eps: float = DEFAULT_EPS) -> float:
    """Normalized pointwise mutual information of one pair.

    Marginals of unseen words are clamped to eps so the value stays finite;
    the joint probability carries eps additively per the formula.
    """
    if table.total_windows == 0:
        raise ValueError("co-occurrence table has no windows")
    T = table.total_windows
    p1 = max(table.word_counts.get(w1, 0) / T, eps)
    p2 = max(table.word_counts.get(w2, 0) / T, eps)
    if w1 == w2:
        joint = table.word_counts.get(w1, 0) / T
    else:
        key = (w1, w2) if w1 < w2 else (w2, w1)
        joint = table.pair_counts.get(key, 0) / T
    return math.log((joint + eps) / (p1 * p2)) / (-math.log(joint + eps))


def npmi_topic(words: tuple[str, ...] | list[str], table: CooccurrenceTable,
               eps: float = DEFAULT_EPS) -> float:
    """Mean pair NPMI over unordered distinct pairs; 0.0 below 2 words."""
    words = list(words)
    if len(words) < 2:
        return 0.0
    vals = [npmi_pair(u, v, table, eps)
            for u, v in combinations(words, 2)]
    return float(np.mean(vals))


def _context_vectors(words: list[str], table: CooccurrenceTable,
                     eps: float) -> np.ndarray:
    vecs = np.empty((len(words), len(words)), dtype=np.float64)
    for i, w in enumerate(words):
        for j, u in enumerate(words):
            vecs[i, j] = npmi_pair(w, u, table, eps)
    return vecs


def cv_topic(words: tuple[str, ...] | list[str], table: CooccurrenceTable,
             eps: float = DEFAULT_EPS) -> float:
    """Mean cosine of per-word NPMI context vectors against their sum.

    Zero-norm vectors get similarity 0 by convention.  The mean similarity
    is mapped from [-1, 1] to [0, 1], so the result always lands in [0, 1].
    """
    words = list(words)
    if len(words) < 2:
        return 0.0
    vecs = _context_vectors(words, table, eps)
    total = vecs.sum(axis=0)
    sims = []
    for i in range(len(words)):
        na = float(np.linalg.norm(vecs[i]))
        nb = float(np.linalg.norm(total))
        if na == 0.0 or nb == 0.0:
            sims.append(0.0)
        else:
            sims.append(float(np.dot(vecs[i], total) / (na * nb)))
    mean_sim = float(np.mean(sims))
    # cosines are within [-1, 1] up to roundoff; clamp before mapping
    mean_sim = min(1.0, max(-1.0, mean_sim))
    return (mean_sim + 1.0) / 2.0


def score_topics(word_sets: list[TopicWordSet], table_npmi: CooccurrenceTable,
                 table_cv: CooccurrenceTable,
                 eps: float = DEFAULT_EPS) -> list[CoherenceScore]:
    """NPMI from the small-window table, Cv from the wide-window table."""
    return [CoherenceScore(topic_id=ws.topic_id,
                           npmi=npmi_topic(ws.words, table_npmi, eps),
                           cv=cv_topic(ws.words, table_cv, eps))
            for ws in word_sets]


def ccdf(scores: list[float] | np.ndarray,
         thresholds: list[float] | np.ndarray) -> list[tuple[float, float]]:
    """Fraction of scores strictly greater than each threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("ccdf needs at least one score")
    return [(float(thr), float((scores > thr).mean())) for thr in thresholds]
