"""Report bundle: one JSON summary plus CSV series for plotting.

The bundle directory holds report.json (counts, rates, F1, per-topic
breakdown, coherence summary, rank correlation between Cv and per-topic
F1), CCDF series for both coherence measures, a coherence-vs-F1 scatter
table, first/second affinity histograms, and the topic term lists.  Bytes
are deterministic for identical inputs; wall-clock metadata lives in a
separate run_info.json written by the CLI, never in report.json.

Variants without a topic stage (or calls without a model) mark the
coherence and affinity sections not applicable and leave the matching CSVs
header-only.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np
from scipy import stats

from . import coherence as coh
from .config import Variant
from .corpus import TokenizedDoc
from .errors import ConfigError
from .lda import lda_top_words
from .pipeline import DetectionReport, LdaStage, TrainedDetector

AFFINITY_BINS = 20

NPMI_THRESHOLDS = [round(-1.0 + 0.05 * i, 10) for i in range(41)]
CV_THRESHOLDS = [round(0.05 * i, 10) for i in range(21)]


def topic_word_sets(detector: TrainedDetector) -> list[coh.TopicWordSet]:
    """Per-topic term lists: native LDA top words, c-TF-IDF otherwise."""
    if detector.variant is Variant.OCSVM_ONLY:
        raise ConfigError("variant ocsvm-only has no topics")
    if isinstance(detector.topic_stage, LdaStage):
        model = detector.topic_stage.model
        return [coh.TopicWordSet(topic_id=k,
                                 words=tuple(lda_top_words(
                                     model, k, detector.config.top_n)))
                for k in range(model.n_topics)]
    return [coh.TopicWordSet(topic_id=s.topic_id, words=s.terms)
            for s in detector.topic_summaries]


def compute_coherence(detector: TrainedDetector,
                      reference_docs: list[TokenizedDoc]
                      ) -> list[coh.CoherenceScore]:
    """Score every topic against the reference corpus windows."""
    word_sets = topic_word_sets(detector)
    restrict = frozenset(w for ws in word_sets for w in ws.words)
    cfg = detector.config
    table_npmi = coh.count_cooccurrences(reference_docs, cfg.npmi_window,
                                         restrict)
    table_cv = coh.count_cooccurrences(reference_docs, cfg.cv_window,
                                       restrict)
    return coh.score_topics(word_sets, table_npmi, table_cv,
                            cfg.coherence_eps)


def affinity_histograms(affinities: np.ndarray | None
                        ) -> tuple[list[int], list[int]] | None:
    """Counts of highest and second-highest affinity over [0,1] bins."""
    if affinities is None or affinities.shape[1] < 2:
        return None
    ordered = np.sort(affinities, axis=1)
    edges = np.linspace(0.0, 1.0, AFFINITY_BINS + 1)
    first, _ = np.histogram(ordered[:, -1], bins=edges)
    second, _ = np.histogram(ordered[:, -2], bins=edges)
    return first.tolist(), second.tolist()


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def _spearman_cv_f1(scores: list[coh.CoherenceScore],
                    report: DetectionReport | None) -> float | None:
    if report is None or len(scores) < 3:
        return None
    f1_by_topic = {c.topic_id: c.f1() for c in report.per_topic}
    pairs = [(s.cv, f1_by_topic[s.topic_id]) for s in scores
             if s.topic_id in f1_by_topic]
    if len(pairs) < 3:
        return None
    rho = stats.spearmanr([p[0] for p in pairs], [p[1] for p in pairs])
    value = float(rho.statistic)
    return None if np.isnan(value) else value


def write_report_bundle(out_dir: str,
                        report: DetectionReport | None,
                        detector: TrainedDetector | None = None,
                        scores: list[coh.CoherenceScore] | None = None,
                        affinities: np.ndarray | None = None) -> dict:
    """Write every bundle file; returns the report.json payload."""
    os.makedirs(out_dir, exist_ok=True)
    has_topics = detector is not None and \
        detector.variant is not Variant.OCSVM_ONLY

    if scores:
        coherence_block = {
            "applicable": True,
            "per_topic": [{"topic_id": s.topic_id, "npmi": s.npmi,
                           "cv": s.cv} for s in scores],
            "mean_npmi": float(np.mean([s.npmi for s in scores])),
            "mean_cv": float(np.mean([s.cv for s in scores])),
        }
        ccdf_npmi = coh.ccdf([s.npmi for s in scores], NPMI_THRESHOLDS)
        ccdf_cv = coh.ccdf([s.cv for s in scores], CV_THRESHOLDS)
    else:
        reason = ("variant has no topic stage" if detector is not None
                  and not has_topics else "no model/corpus provided")
        coherence_block = {"applicable": False, "reason": reason}
        ccdf_npmi = []
        ccdf_cv = []

    hists = affinity_histograms(affinities)
    if hists is not None:
        affinity_block = {"applicable": True, "bins": AFFINITY_BINS}
    else:
        reason = ("variant has no affinity vectors" if detector is not None
                  and not has_topics else "no affinities provided")
        affinity_block = {"applicable": False, "reason": reason}

    payload: dict = {
        "schema_version": 1,
        "variant": detector.variant.value if detector is not None else None,
        "seed": detector.config.seed if detector is not None else None,
        "coherence": coherence_block,
        "affinity": affinity_block,
    }
    if report is not None:
        payload.update({
            "counts": {"tp": report.tp, "fp": report.fp, "tn": report.tn,
                       "fn": report.fn},
            "rates_pct": {"tpr": report.tpr, "tnr": report.tnr,
                          "fpr": report.fpr, "fnr": report.fnr},
            "f1": report.f1,
            "n_test": report.n_test,
            "per_topic": [{"topic_id": c.topic_id, "tp": c.tp, "fp": c.fp,
                           "tn": c.tn, "fn": c.fn, "f1": c.f1()}
                          for c in report.per_topic],
        })
    payload["spearman_cv_f1"] = _spearman_cv_f1(scores or [], report)

    with open(os.path.join(out_dir, "report.json"), "w",
              encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=1) + "\n")

    write_csv(os.path.join(out_dir, "ccdf_npmi.csv"),
               ["threshold", "fraction"],
               [[float(t), float(f)] for t, f in ccdf_npmi])
    write_csv(os.path.join(out_dir, "ccdf_cv.csv"),
               ["threshold", "fraction"],
               [[float(t), float(f)] for t, f in ccdf_cv])

    scatter_rows: list[list] = []
    if scores is not None and report is not None:
        per_topic = {c.topic_id: c for c in report.per_topic}
        for s in sorted(scores, key=lambda s: s.topic_id):
            cell = per_topic.get(s.topic_id)
            if cell is not None:
                scatter_rows.append([s.topic_id, float(s.cv),
                                     float(cell.f1())])
    write_csv(os.path.join(out_dir, "coherence_f1_scatter.csv"),
               ["topic_id", "cv", "f1"], scatter_rows)

    edges = np.linspace(0.0, 1.0, AFFINITY_BINS + 1)
    first_rows: list[list] = []
    second_rows: list[list] = []
    if hists is not None:
        first, second = hists
        for b in range(AFFINITY_BINS):
            first_rows.append([float(round(edges[b], 10)),
                               float(round(edges[b + 1], 10)), first[b]])
            second_rows.append([float(round(edges[b], 10)),
                                float(round(edges[b + 1], 10)), second[b]])
    write_csv(os.path.join(out_dir, "affinity_first.csv"),
               ["bin_start", "bin_end", "count"], first_rows)
    write_csv(os.path.join(out_dir, "affinity_second.csv"),
               ["bin_start", "bin_end", "count"], second_rows)

    topics_payload: dict = {"applicable": has_topics, "topics": []}
    if has_topics:
        assert detector is not None
        if isinstance(detector.topic_stage, LdaStage):
            model = detector.topic_stage.model
            assigned = np.argmax(model.doc_topic, axis=1) if \
                model.doc_topic.size else np.zeros(0, dtype=np.int64)
            topics_payload["topics"] = [
                {"topic_id": ws.topic_id, "terms": list(ws.words),
                 "doc_count": int(np.sum(assigned == ws.topic_id))}
                for ws in topic_word_sets(detector)]
        else:
            topics_payload["topics"] = [
                {"topic_id": s.topic_id, "terms": list(s.terms),
                 "scores": list(s.scores), "doc_count": s.doc_count}
                for s in detector.topic_summaries]
    with open(os.path.join(out_dir, "topics.json"), "w",
              encoding="utf-8") as fh:
        fh.write(json.dumps(topics_payload, sort_keys=True, indent=1) + "\n")
    return payload
