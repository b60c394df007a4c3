"""Class-based TF-IDF for naming topics.

Documents assigned to a topic are concatenated into one class document.
A term's score in a class is ``tf(t, c) * log(1 + A / f(t))`` where
``tf`` is the term count inside the class, ``f`` the term's total count
over all classes, and ``A`` the mean token count per class.  Terms in
exactly one class get the largest idf boost; terms spread evenly are
damped toward ``tf * log(2)``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .corpus import TokenizedDoc


@dataclass
class TopicSummary:
    topic_id: int
    terms: tuple[str, ...]
    scores: tuple[float, ...]
    doc_count: int = 0


def class_term_counts(docs: list[TokenizedDoc],
                      labels: list[int]) -> dict[int, Counter]:
    """Merge per-doc token counts by topic label; noise (-1) is dropped."""
    if len(docs) != len(labels):
        raise ValueError("docs and labels must align")
    merged: dict[int, Counter] = {}
    for doc, label in zip(docs, labels):
        if label < 0:
            continue
        merged.setdefault(int(label), Counter()).update(doc.tokens)
    return merged


def ctfidf_scores(class_counts: dict[int, Counter]
                  ) -> dict[int, dict[str, float]]:
    """Score every term in every class with tf * log(1 + A / f)."""
    if not class_counts:
        return {}
    total_per_term: Counter = Counter()
    for counts in class_counts.values():
        total_per_term.update(counts)
    avg_tokens = sum(total_per_term.values()) / len(class_counts)
    scores: dict[int, dict[str, float]] = {}
    for label, counts in class_counts.items():
        scores[label] = {
            term: tf * math.log(1.0 + avg_tokens / total_per_term[term])
            for term, tf in counts.items()
        }
    return scores


def top_terms(docs: list[TokenizedDoc], labels: list[int],
              n_terms: int = 10) -> list[TopicSummary]:
    """Top-N terms per topic, by score descending then term ascending."""
    scores = ctfidf_scores(class_term_counts(docs, labels))
    doc_counts = Counter(int(lbl) for lbl in labels if lbl >= 0)
    out: list[TopicSummary] = []
    for label in sorted(scores):
        ranked = sorted(scores[label].items(),
                        key=lambda kv: (-kv[1], kv[0]))[:n_terms]
        out.append(TopicSummary(
            topic_id=label,
            terms=tuple(t for t, _ in ranked),
            scores=tuple(s for _, s in ranked),
            doc_count=doc_counts.get(label, 0)))
    return out
