"""End-to-end orchestration of the five experiment variants.

Variants share the same skeleton: a topic stage groups apps by their store
descriptions, then one-class SVMs on binary sensitive-API vectors flag apps
whose API usage does not fit their topic.  The topic stage differs per
variant:

* ``bertdetect``: document embeddings, neighbor-graph reduction, density
  clustering, softmax affinity to exemplar centroids.
* ``lda``: collapsed-Gibbs LDA, assignment by dominant topic.
* ``chabada``: LDA topic mixtures clustered with k-means.
* ``gcata``: k-means directly on the document embeddings.
* ``ocsvm-only``: no topic stage; one global detector (ablation).

Every topic with at least ``min_topic_train`` training members gets a
dedicated detector; all other apps score against a global fallback trained
on the full benign set.  Malicious is the positive class throughout, and a
prediction's verdict is malicious exactly when its decision score is
negative.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import density, kmeans, lda, reducer, topic_terms
from .config import RunConfig, Variant
from .corpus import (AppRecord, DatasetSplit, MALICIOUS, TokenizedDoc,
                     api_matrix, build_api_vocabulary, dataset_fingerprint,
                     load_stopwords, tokenize, tokenize_split,
                     vectorize_api_calls, ApiVocabulary)
from .embedding import EmbeddingMatrix, embeddings_fingerprint
from .errors import ConfigError, DataError, NumericError
from .ocsvm import OcSvmModel, ocsvm_decision, ocsvm_fit

SCHEMA_VERSION = 1

GLOBAL_TOPIC = 0


@dataclass
class BertTopicStage:
    """Reducer + density clustering artifacts for the bertdetect variant.

    Training points are not stored; they are rebuilt from the embedding
    file at inference and checked against ``train_fingerprint``.
    """

    reducer_params: dict
    layout: np.ndarray
    train_app_ids: tuple[str, ...]
    train_fingerprint: str
    centroids: np.ndarray
    temperature: float
    n_topics: int
    train_labels: np.ndarray
    stabilities: tuple[float, ...]


@dataclass
class LdaStage:
    model: lda.LdaModel


@dataclass
class ChabadaStage:
    model: lda.LdaModel
    km: kmeans.KMeansModel


@dataclass
class GcataStage:
    km: kmeans.KMeansModel
    train_fingerprint: str


@dataclass
class Prediction:
    app_id: str
    assigned_topic: int
    decision_score: float
    verdict: str


@dataclass
class TrainedDetector:
    variant: Variant
    config: RunConfig
    api_vocab: ApiVocabulary
    detectors: dict[int, OcSvmModel]
    fallback: OcSvmModel
    topic_stage: object | None
    topic_summaries: list[topic_terms.TopicSummary] = field(
        default_factory=list)
    manifest: dict = field(default_factory=dict)

    def n_topics(self) -> int:
        stage = self.topic_stage
        if stage is None:
            return 0
        if isinstance(stage, BertTopicStage):
            return stage.n_topics
        if isinstance(stage, LdaStage):
            return stage.model.n_topics
        if isinstance(stage, ChabadaStage):
            return stage.km.k
        if isinstance(stage, GcataStage):
            return stage.km.k
        raise TypeError(f"unknown topic stage {type(stage)!r}")


def _require_embeddings(variant: Variant,
                        embeddings: EmbeddingMatrix | None) -> None:
    if embeddings is None:
        raise ConfigError(f"variant {variant.value!r} needs an embeddings "
                          f"file (--embeddings)")


def _train_matrix(split: DatasetSplit,
                  embeddings: EmbeddingMatrix) -> np.ndarray:
    return embeddings.matrix_for([r.app_id for r in split.records])


def _assert_all_benign(split: DatasetSplit) -> None:
    bad = [r.app_id for r in split.records if r.label == MALICIOUS]
    if bad:
        raise DataError(f"training split contains {len(bad)} apps labelled "
                        f"malicious (first: {bad[0]!r}); training data must "
                        f"be benign")


def _fold_in_seed(base_seed: int, index: int) -> int:
    return (base_seed * 1_000_003 + index) % (2 ** 32 - 1)


def _fit_topic_detectors(api: np.ndarray, labels: np.ndarray,
                         config: RunConfig
                         ) -> tuple[dict[int, OcSvmModel], OcSvmModel]:
    """One OC-SVM per topic with enough members, plus the global fallback."""
    eligible = []
    for topic in sorted(set(int(t) for t in labels)):
        members = np.flatnonzero(labels == topic)
        if members.size >= config.min_topic_train:
            eligible.append((topic, members))

    def fit_one(members: np.ndarray) -> OcSvmModel:
        return ocsvm_fit(api[members], nu=config.nu, kernel=config.kernel,
                         gamma=config.gamma)

    detectors: dict[int, OcSvmModel] = {}
    if config.threads == 1 or len(eligible) <= 1:
        for topic, members in eligible:
            detectors[topic] = fit_one(members)
    else:
        workers = config.threads if config.threads > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [(topic, pool.submit(fit_one, members))
                       for topic, members in eligible]
            for topic, fut in futures:
                detectors[topic] = fut.result()
    fallback = ocsvm_fit(api, nu=config.nu, kernel=config.kernel,
                         gamma=config.gamma)
    return detectors, fallback


def _bert_topic_stage(train: DatasetSplit, embeddings: EmbeddingMatrix,
                      config: RunConfig) -> tuple[BertTopicStage, np.ndarray]:
    app_ids = [r.app_id for r in train.records]
    X = embeddings.matrix_for(app_ids)
    red = reducer.fit_reducer(X, n_neighbors=config.n_neighbors,
                              out_dim=config.umap_dim,
                              min_dist=config.min_dist,
                              epochs=config.epochs, seed=config.seed)
    assignment = density.cluster_points(red.layout,
                                        min_cluster_size=config.min_cluster_size,
                                        min_samples=config.min_samples)
    if assignment.n_clusters == 0:
        raise NumericError("density clustering found zero topics; lower "
                           "min_cluster_size or revisit the embeddings")
    centroids = density.exemplar_centroids(red.layout, assignment)
    temperature = density.affinity_temperature(centroids)
    aff = density.affinities_from_centroids(red.layout, centroids,
                                            temperature)
    labels = aff.argmax(axis=1)
    stage = BertTopicStage(
        reducer_params={
            "n_neighbors": red.n_neighbors,
            "out_dim": red.out_dim,
            "min_dist": red.min_dist,
            "epochs": red.epochs,
            "seed": red.seed,
            "a": red.a,
            "b": red.b,
        },
        layout=red.layout,
        train_app_ids=tuple(app_ids),
        train_fingerprint=embeddings_fingerprint(embeddings, app_ids),
        centroids=centroids,
        temperature=temperature,
        n_topics=assignment.n_clusters,
        train_labels=labels.astype(np.int64),
        stabilities=tuple(assignment.stabilities))
    return stage, labels


def _lda_affinity_matrix(model: lda.LdaModel,
                         docs: list[TokenizedDoc]) -> np.ndarray:
    """Training-doc mixtures; docs skipped at fit time get the uniform row."""
    by_id = {app_id: i for i, app_id in enumerate(model.doc_ids)}
    out = np.empty((len(docs), model.n_topics), dtype=np.float64)
    for i, doc in enumerate(docs):
        row = by_id.get(doc.app_id)
        if row is None:
            out[i] = 1.0 / model.n_topics
        else:
            out[i] = lda.mixture_from_counts(model.doc_topic[row],
                                             model.alpha)
    return out


def _clamped_kmeans(X: np.ndarray, k: int, seed: int) -> kmeans.KMeansModel:
    n = X.shape[0]
    if k > n:
        import warnings
        warnings.warn(f"k={k} exceeds n={n}; clamping to {n}")
        k = n
    return kmeans.kmeans_fit(X, k, seed=seed)


def train(variant: Variant, train_split: DatasetSplit,
          embeddings: EmbeddingMatrix | None,
          config: RunConfig) -> TrainedDetector:
    """Fit the topic stage and the per-topic detectors on benign data."""
    # detectors own their config; never mutate the caller's copy
    config = RunConfig.from_dict({**config.to_dict(),
                                  "variant": variant.value})
    _assert_all_benign(train_split)
    if not train_split.records:
        raise DataError("training split is empty")
    vocab = build_api_vocabulary(train_split)
    api, _ = api_matrix(train_split.records, vocab)
    stopwords = load_stopwords()
    docs = tokenize_split(train_split, stopwords)

    summaries: list[topic_terms.TopicSummary] = []
    stage: object | None = None
    if variant is Variant.BERTDETECT:
        _require_embeddings(variant, embeddings)
        stage, labels = _bert_topic_stage(train_split, embeddings, config)
        summaries = topic_terms.top_terms(docs, [int(t) for t in labels],
                                          config.top_n)
    elif variant is Variant.LDA_ONLY:
        model = lda.fit_lda(docs, config.n_topics,
                            alpha=config.lda_alpha, beta=config.lda_beta,
                            iterations=config.lda_iterations,
                            seed=config.seed)
        stage = LdaStage(model=model)
        labels = _lda_affinity_matrix(model, docs).argmax(axis=1)
    elif variant is Variant.CHABADA:
        model = lda.fit_lda(docs, config.n_topics,
                            alpha=config.lda_alpha, beta=config.lda_beta,
                            iterations=config.lda_iterations,
                            seed=config.seed)
        aff = _lda_affinity_matrix(model, docs)
        km = _clamped_kmeans(aff, config.n_clusters, config.seed)
        stage = ChabadaStage(model=model, km=km)
        labels = kmeans.kmeans_assign(km, aff)
        summaries = topic_terms.top_terms(docs, [int(t) for t in labels],
                                          config.top_n)
    elif variant is Variant.GCATA:
        _require_embeddings(variant, embeddings)
        X = _train_matrix(train_split, embeddings)
        km = _clamped_kmeans(X, config.n_clusters, config.seed)
        app_ids = [r.app_id for r in train_split.records]
        stage = GcataStage(km=km,
                           train_fingerprint=embeddings_fingerprint(
                               embeddings, app_ids))
        labels = kmeans.kmeans_assign(km, X)
        summaries = topic_terms.top_terms(docs, [int(t) for t in labels],
                                          config.top_n)
    elif variant is Variant.OCSVM_ONLY:
        labels = np.zeros(len(train_split.records), dtype=np.int64)
    else:
        raise ConfigError(f"unhandled variant {variant!r}")

    if variant is Variant.OCSVM_ONLY:
        fallback = ocsvm_fit(api, nu=config.nu, kernel=config.kernel,
                             gamma=config.gamma)
        detectors = {GLOBAL_TOPIC: fallback}
    else:
        detectors, fallback = _fit_topic_detectors(api,
                                                   np.asarray(labels),
                                                   config)
    manifest = {
        "seed": config.seed,
        "variant": variant.value,
        "train_fingerprint": dataset_fingerprint(train_split),
        "n_train": len(train_split.records),
        "api_vocab_size": len(vocab.entries),
        "nu": config.nu,
        "gamma": config.gamma,
        "kernel": config.kernel,
        "tuned": None,
    }
    return TrainedDetector(variant=variant, config=config, api_vocab=vocab,
                           detectors=detectors, fallback=fallback,
                           topic_stage=stage, topic_summaries=summaries,
                           manifest=manifest)


def _bert_training_matrix(stage: BertTopicStage,
                          embeddings: EmbeddingMatrix) -> np.ndarray:
    X = embeddings.matrix_for(list(stage.train_app_ids))
    fp = embeddings_fingerprint(embeddings, list(stage.train_app_ids))
    if fp != stage.train_fingerprint:
        raise DataError("embedding file does not match the training "
                        "embeddings recorded in the model (fingerprint "
                        "mismatch)")
    return X


def assign_topics(detector: TrainedDetector, apps: list[AppRecord],
                  embeddings: EmbeddingMatrix | None
                  ) -> tuple[np.ndarray, np.ndarray | None]:
    """Topic id per app, plus the affinity matrix when the variant has one.

    For bertdetect the affinity matrix is softmax affinity to exemplar
    centroids; for the LDA variants it is the fold-in topic mixture.  GCata
    and OcsvmOnly yield no affinities (None).
    """
    config = detector.config
    stage = detector.topic_stage
    n = len(apps)
    if detector.variant is Variant.OCSVM_ONLY:
        return np.zeros(n, dtype=np.int64), None
    if detector.variant is Variant.BERTDETECT:
        _require_embeddings(detector.variant, embeddings)
        assert isinstance(stage, BertTopicStage)
        X = embeddings.matrix_for([a.app_id for a in apps])
        train_X = _bert_training_matrix(stage, embeddings)
        red = reducer.UmapReducer(
            n_neighbors=stage.reducer_params["n_neighbors"],
            out_dim=stage.reducer_params["out_dim"],
            min_dist=stage.reducer_params["min_dist"],
            epochs=stage.reducer_params["epochs"],
            seed=stage.reducer_params["seed"],
            a=stage.reducer_params["a"],
            b=stage.reducer_params["b"],
            train_points=train_X,
            layout=stage.layout)
        low = reducer.transform_many(red, X)
        aff = density.affinities_from_centroids(low, stage.centroids,
                                                stage.temperature)
        return aff.argmax(axis=1).astype(np.int64), aff
    stopwords = load_stopwords()
    if detector.variant in (Variant.LDA_ONLY, Variant.CHABADA):
        assert isinstance(stage, (LdaStage, ChabadaStage))
        model = stage.model
        aff = np.empty((n, model.n_topics), dtype=np.float64)
        for i, app in enumerate(apps):
            doc = TokenizedDoc(app_id=app.app_id,
                               tokens=tokenize(app.description, stopwords))
            aff[i] = lda.fold_in_document(
                model, doc, iterations=config.fold_in_iterations,
                seed=_fold_in_seed(config.seed, i))
        if detector.variant is Variant.LDA_ONLY:
            return aff.argmax(axis=1).astype(np.int64), aff
        assert isinstance(stage, ChabadaStage)
        return kmeans.kmeans_assign(stage.km, aff).astype(np.int64), aff
    if detector.variant is Variant.GCATA:
        _require_embeddings(detector.variant, embeddings)
        assert isinstance(stage, GcataStage)
        X = embeddings.matrix_for([a.app_id for a in apps])
        return kmeans.kmeans_assign(stage.km, X).astype(np.int64), None
    raise ConfigError(f"unhandled variant {detector.variant!r}")


def infer(detector: TrainedDetector, apps: list[AppRecord],
          embeddings: EmbeddingMatrix | None = None) -> list[Prediction]:
    """Assign each app a topic, score it with that topic's detector."""
    if not apps:
        return []
    topics, _ = assign_topics(detector, apps, embeddings)
    index = detector.api_vocab.index_of()
    out: list[Prediction] = []
    for app, topic in zip(apps, topics):
        vec = vectorize_api_calls(app, detector.api_vocab, index)
        model = detector.detectors.get(int(topic), detector.fallback)
        score = float(ocsvm_decision(model, vec.bits[None, :])[0])
        verdict = MALICIOUS if score < 0.0 else "benign"
        out.append(Prediction(app_id=app.app_id, assigned_topic=int(topic),
                              decision_score=score, verdict=verdict))
    return out


@dataclass
class PerTopicCounts:
    topic_id: int
    tp: int
    fp: int
    tn: int
    fn: int

    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 2.0 * self.tp / denom if denom else 0.0


@dataclass
class DetectionReport:
    tp: int
    fp: int
    tn: int
    fn: int
    tpr: float
    tnr: float
    fpr: float
    fnr: float
    f1: float
    per_topic: list[PerTopicCounts]
    n_test: int


def evaluate(predictions: list[Prediction],
             labelled: list[AppRecord]) -> DetectionReport:
    """Confusion counts and rates with malicious as the positive class.

    Every labelled app must have exactly one prediction and every
    prediction a labelled ground truth.
    """
    truth = {}
    for rec in labelled:
        if rec.label is None:
            raise DataError(f"app {rec.app_id!r} has no label; evaluation "
                            f"needs ground truth for every app")
        truth[rec.app_id] = rec.label
    pred_ids = [p.app_id for p in predictions]
    if len(set(pred_ids)) != len(pred_ids):
        raise DataError("duplicate app_id in predictions")
    missing = sorted(set(truth) - set(pred_ids))
    extra = sorted(set(pred_ids) - set(truth))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"{len(missing)} labelled apps lack predictions "
                         f"(first: {missing[0]!r})")
        if extra:
            parts.append(f"{len(extra)} predictions lack ground truth "
                         f"(first: {extra[0]!r})")
        raise DataError("; ".join(parts))

    per_topic: dict[int, PerTopicCounts] = {}
    tp = fp = tn = fn = 0
    for p in predictions:
        actual_malicious = truth[p.app_id] == MALICIOUS
        predicted_malicious = p.verdict == MALICIOUS
        cell = per_topic.setdefault(
            p.assigned_topic,
            PerTopicCounts(topic_id=p.assigned_topic, tp=0, fp=0, tn=0,
                           fn=0))
        if predicted_malicious and actual_malicious:
            tp += 1
            cell.tp += 1
        elif predicted_malicious and not actual_malicious:
            fp += 1
            cell.fp += 1
        elif not predicted_malicious and actual_malicious:
            fn += 1
            cell.fn += 1
        else:
            tn += 1
            cell.tn += 1

    def rate(num: int, den: int) -> float:
        return 100.0 * num / den if den else 0.0

    f1 = 2.0 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
    return DetectionReport(
        tp=tp, fp=fp, tn=tn, fn=fn,
        tpr=rate(tp, tp + fn), tnr=rate(tn, tn + fp),
        fpr=rate(fp, fp + tn), fnr=rate(fn, fn + tp),
        f1=f1,
        per_topic=[per_topic[t] for t in sorted(per_topic)],
        n_test=len(predictions))


def tune_nu(variant: Variant, train_split: DatasetSplit,
            embeddings: EmbeddingMatrix | None, config: RunConfig,
            validation: DatasetSplit,
            grid: tuple[float, ...] = (0.02, 0.05, 0.1, 0.15, 0.2, 0.3)
            ) -> TrainedDetector:
    """Grid-search nu on the validation split, maximizing F1.

    The topic stage is trained once; only the detectors are refit per
    candidate.  Ties prefer the smaller nu.  The chosen value and the full
    grid results are recorded in the manifest.
    """
    labelled = validation.labelled()
    if len(labelled) != len(validation.records):
        raise DataError("validation split must be fully labelled for "
                        "nu tuning")
    if not labelled:
        raise DataError("validation split is empty")
    detector = train(variant, train_split, embeddings, config)
    api, _ = api_matrix(train_split.records, detector.api_vocab)
    if variant is Variant.OCSVM_ONLY:
        labels = np.zeros(len(train_split.records), dtype=np.int64)
    else:
        labels, _ = assign_topics(detector, train_split.records, embeddings)
    results: dict[str, float] = {}
    best_nu, best_f1 = None, -1.0
    for candidate in grid:
        trial_cfg = RunConfig.from_dict({**config.to_dict(),
                                         "nu": candidate})
        if variant is Variant.OCSVM_ONLY:
            fb = ocsvm_fit(api, nu=candidate, kernel=config.kernel,
                           gamma=config.gamma)
            detector.detectors = {GLOBAL_TOPIC: fb}
            detector.fallback = fb
        else:
            dets, fb = _fit_topic_detectors(api, labels, trial_cfg)
            detector.detectors = dets
            detector.fallback = fb
        preds = infer(detector, validation.records, embeddings)
        f1 = evaluate(preds, labelled).f1
        results[f"{candidate:g}"] = f1
        if f1 > best_f1:
            best_nu, best_f1 = candidate, f1
    final_cfg = RunConfig.from_dict({**config.to_dict(), "nu": best_nu})
    if variant is Variant.OCSVM_ONLY:
        fb = ocsvm_fit(api, nu=best_nu, kernel=config.kernel,
                       gamma=config.gamma)
        detector.detectors = {GLOBAL_TOPIC: fb}
        detector.fallback = fb
    else:
        dets, fb = _fit_topic_detectors(api, labels, final_cfg)
        detector.detectors = dets
        detector.fallback = fb
    detector.config.nu = best_nu
    detector.manifest["nu"] = best_nu
    detector.manifest["tuned"] = {"parameter": "nu", "chosen": best_nu,
                                  "grid": {k: results[k] for k in
                                           sorted(results)},
                                  "validation_f1": best_f1}
    return detector
