"""Versioned JSON (de)serialization of trained detectors.

One artifact file per detector.  Arrays are stored as nested lists of
floats or ints; the schema_version field gates loading, and a mismatch is
a data error (exit code 2 at the CLI).  Written JSON uses sorted keys so
identical detectors serialize to identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from . import kmeans, lda, topic_terms
from .config import RunConfig, Variant, parse_variant
from .corpus import ApiVocabulary
from .errors import DataError
from .ocsvm import OcSvmModel
from .pipeline import (BertTopicStage, ChabadaStage, GcataStage, LdaStage,
                       SCHEMA_VERSION, TrainedDetector)


def _ocsvm_to_dict(model: OcSvmModel) -> dict:
    sv = model.support_vectors
    out = {
        "kernel": model.kernel,
        "gamma": model.gamma,
        "nu": model.nu,
        "rho": model.rho,
        "n_train": model.n_train,
        "kkt_gap": model.kkt_gap,
        "alphas": model.alphas.tolist(),
    }
    # binary vectors (the pipeline case) compress to set-bit index lists
    if sv.size == 0 or np.isin(sv, (0.0, 1.0)).all():
        out["sv_encoding"] = "bits"
        out["sv_dim"] = int(sv.shape[1]) if sv.ndim == 2 else 0
        out["support_vectors"] = [np.flatnonzero(row).tolist() for row in sv]
    else:
        out["sv_encoding"] = "dense"
        out["support_vectors"] = sv.tolist()
    return out


def _ocsvm_from_dict(data: dict) -> OcSvmModel:
    if data.get("sv_encoding") == "bits":
        dim = data["sv_dim"]
        rows = data["support_vectors"]
        sv = np.zeros((len(rows), dim), dtype=np.float64)
        for i, bits in enumerate(rows):
            sv[i, bits] = 1.0
    else:
        sv = np.asarray(data["support_vectors"], dtype=np.float64)
    return OcSvmModel(
        kernel=data["kernel"], gamma=data["gamma"], nu=data["nu"],
        support_vectors=sv,
        alphas=np.asarray(data["alphas"], dtype=np.float64),
        rho=data["rho"], n_train=data["n_train"],
        kkt_gap=data["kkt_gap"])


def _lda_to_dict(model: lda.LdaModel) -> dict:
    ks, ws = np.nonzero(model.topic_word)
    return {
        "n_topics": model.n_topics,
        "alpha": model.alpha,
        "beta": model.beta,
        "vocab": list(model.vocab),
        # sparse (topic, word, count) triples; zeros dominate the K x V grid
        "topic_word_sparse": [
            [int(k), int(w), int(model.topic_word[k, w])]
            for k, w in zip(ks, ws)],
        "topic_totals": model.topic_totals.tolist(),
        "doc_topic": model.doc_topic.tolist(),
        "doc_ids": list(model.doc_ids),
        "iterations": model.iterations,
        "seed": model.seed,
        "skipped_docs": list(model.skipped_docs),
    }


def _lda_from_dict(data: dict) -> lda.LdaModel:
    n_topics = data["n_topics"]
    vocab = tuple(data["vocab"])
    topic_word = np.zeros((n_topics, len(vocab)), dtype=np.int64)
    for k, w, count in data["topic_word_sparse"]:
        topic_word[k, w] = count
    return lda.LdaModel(
        n_topics=n_topics, alpha=data["alpha"], beta=data["beta"],
        vocab=vocab,
        topic_word=topic_word,
        topic_totals=np.asarray(data["topic_totals"], dtype=np.int64),
        doc_topic=np.asarray(data["doc_topic"], dtype=np.int64),
        doc_ids=tuple(data["doc_ids"]),
        iterations=data["iterations"], seed=data["seed"],
        skipped_docs=tuple(data["skipped_docs"]))


def _kmeans_to_dict(km: kmeans.KMeansModel) -> dict:
    return {
        "k": km.k,
        "centroids": km.centroids.tolist(),
        "inertia": km.inertia,
        "iterations_run": km.iterations_run,
        "seed": km.seed,
    }


def _kmeans_from_dict(data: dict) -> kmeans.KMeansModel:
    return kmeans.KMeansModel(
        k=data["k"],
        centroids=np.asarray(data["centroids"], dtype=np.float64),
        inertia=data["inertia"], iterations_run=data["iterations_run"],
        seed=data["seed"])


def _stage_to_dict(stage: object | None) -> dict | None:
    if stage is None:
        return None
    if isinstance(stage, BertTopicStage):
        return {
            "type": "umap_hdbscan",
            "reducer_params": stage.reducer_params,
            "layout": stage.layout.tolist(),
            "train_app_ids": list(stage.train_app_ids),
            "train_fingerprint": stage.train_fingerprint,
            "centroids": stage.centroids.tolist(),
            "temperature": stage.temperature,
            "n_topics": stage.n_topics,
            "train_labels": stage.train_labels.tolist(),
            "stabilities": list(stage.stabilities),
        }
    if isinstance(stage, LdaStage):
        return {"type": "lda", "model": _lda_to_dict(stage.model)}
    if isinstance(stage, ChabadaStage):
        return {"type": "lda_kmeans", "model": _lda_to_dict(stage.model),
                "kmeans": _kmeans_to_dict(stage.km)}
    if isinstance(stage, GcataStage):
        return {"type": "kmeans", "kmeans": _kmeans_to_dict(stage.km),
                "train_fingerprint": stage.train_fingerprint}
    raise TypeError(f"unknown topic stage {type(stage)!r}")


def _stage_from_dict(data: dict | None) -> object | None:
    if data is None:
        return None
    kind = data.get("type")
    if kind == "umap_hdbscan":
        return BertTopicStage(
            reducer_params=data["reducer_params"],
            layout=np.asarray(data["layout"], dtype=np.float64),
            train_app_ids=tuple(data["train_app_ids"]),
            train_fingerprint=data["train_fingerprint"],
            centroids=np.asarray(data["centroids"], dtype=np.float64),
            temperature=data["temperature"],
            n_topics=data["n_topics"],
            train_labels=np.asarray(data["train_labels"], dtype=np.int64),
            stabilities=tuple(data["stabilities"]))
    if kind == "lda":
        return LdaStage(model=_lda_from_dict(data["model"]))
    if kind == "lda_kmeans":
        return ChabadaStage(model=_lda_from_dict(data["model"]),
                            km=_kmeans_from_dict(data["kmeans"]))
    if kind == "kmeans":
        return GcataStage(km=_kmeans_from_dict(data["kmeans"]),
                          train_fingerprint=data["train_fingerprint"])
    raise DataError(f"unknown topic stage type {kind!r} in model artifact")


def detector_to_dict(detector: TrainedDetector) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "variant": detector.variant.value,
        "config": detector.config.to_dict(),
        "manifest": detector.manifest,
        "api_vocab": list(detector.api_vocab.entries),
        "detectors": {str(topic): _ocsvm_to_dict(model)
                      for topic, model in sorted(detector.detectors.items())},
        "fallback": _ocsvm_to_dict(detector.fallback),
        "topic_stage": _stage_to_dict(detector.topic_stage),
        "topic_summaries": [
            {"topic_id": s.topic_id, "terms": list(s.terms),
             "scores": list(s.scores), "doc_count": s.doc_count}
            for s in detector.topic_summaries],
    }


def detector_from_dict(data: dict) -> TrainedDetector:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DataError(f"model artifact has schema_version {version!r}; "
                        f"this build reads version {SCHEMA_VERSION}")
    config = RunConfig.from_dict(data["config"])
    return TrainedDetector(
        variant=parse_variant(data["variant"]),
        config=config,
        api_vocab=ApiVocabulary(entries=tuple(data["api_vocab"])),
        detectors={int(topic): _ocsvm_from_dict(model)
                   for topic, model in data["detectors"].items()},
        fallback=_ocsvm_from_dict(data["fallback"]),
        topic_stage=_stage_from_dict(data["topic_stage"]),
        topic_summaries=[
            topic_terms.TopicSummary(topic_id=s["topic_id"],
                                     terms=tuple(s["terms"]),
                                     scores=tuple(s["scores"]),
                                     doc_count=s["doc_count"])
            for s in data["topic_summaries"]],
        manifest=data["manifest"])


def save_detector(detector: TrainedDetector, path: str) -> None:
    payload = json.dumps(detector_to_dict(detector), sort_keys=True,
                         indent=1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(payload + "\n")


def load_detector(path: str) -> TrainedDetector:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read model artifact {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"model artifact {path} is not valid JSON: "
                        f"{exc}") from exc
    return detector_from_dict(data)
