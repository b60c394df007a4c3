#!/usr/bin/env python3
"""Train every variant on the planted synthetic corpus and compare them.

Generates the planted-theme corpus, embeds descriptions with the hashed
fallback embedder, trains BertDetect, the three baselines, and the
OcsvmOnly ablation, then prints one confusion row per variant.  With
--out-dir, saves each model and its predictions CSV next to a report
bundle.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from topicguard import artifact, pipeline, report, synth
from topicguard.config import RunConfig, Variant
from topicguard.corpus import load_stopwords, tokenize_split
from topicguard.embedding import embed_docs


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--nu", type=float, default=0.05)
    parser.add_argument("--themes", type=int, default=8)
    parser.add_argument("--benign-per-theme", type=int, default=100)
    parser.add_argument("--malicious", type=int, default=80)
    parser.add_argument("--corpus-seed", type=int, default=1234)
    parser.add_argument("--dim", type=int, default=64,
                        help="fallback embedding width")
    parser.add_argument("--emb-seed", type=int, default=7)
    parser.add_argument("--out-dir", default=None,
                        help="save models, predictions, and report bundles")
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    spec = synth.SynthSpec(n_themes=args.themes,
                           benign_per_theme=args.benign_per_theme,
                           n_malicious=args.malicious,
                           seed=args.corpus_seed)
    train, test, _ = synth.generate_corpus(spec)
    stopwords = load_stopwords()
    docs = tokenize_split(train, stopwords) + tokenize_split(test, stopwords)
    embeddings = embed_docs(docs, args.dim, args.emb_seed)
    print(f"corpus: {len(train.records)} train / {len(test.records)} test "
          f"({args.malicious} malicious), embeddings dim {args.dim}")

    base = dict(seed=args.seed, nu=args.nu, threads=1,
                n_topics=args.themes, n_clusters=args.themes)
    rows = []
    for variant in (Variant.BERTDETECT, Variant.LDA_ONLY, Variant.CHABADA,
                    Variant.GCATA, Variant.OCSVM_ONLY):
        needs_emb = variant in (Variant.BERTDETECT, Variant.GCATA)
        emb = embeddings if needs_emb else None
        start = time.perf_counter()
        detector = pipeline.train(variant, train, emb, RunConfig(**base))
        predictions = pipeline.infer(detector, test.records, emb)
        result = pipeline.evaluate(predictions, test.records)
        elapsed = time.perf_counter() - start
        rows.append((variant.value, result, detector.n_topics(), elapsed))

        if args.out_dir:
            vdir = os.path.join(args.out_dir, variant.value)
            os.makedirs(vdir, exist_ok=True)
            artifact.save_detector(detector,
                                   os.path.join(vdir, "model.json"))
            from topicguard.cli import _write_predictions_csv
            _write_predictions_csv(os.path.join(vdir, "predictions.csv"),
                                   predictions)
            scores = None
            affinities = None
            if variant is not Variant.OCSVM_ONLY:
                scores = report.compute_coherence(
                    detector, tokenize_split(train, stopwords))
                _, affinities = pipeline.assign_topics(detector,
                                                       test.records, emb)
            report.write_report_bundle(vdir, result, detector, scores,
                                       affinities)

    print()
    print(f"{'variant':<12} {'TP':>4} {'FN':>4} {'FP':>4} {'TN':>4} "
          f"{'TPR%':>7} {'TNR%':>7} {'F1':>7} {'topics':>6} {'sec':>6}")
    for name, r, n_topics, elapsed in rows:
        print(f"{name:<12} {r.tp:>4} {r.fn:>4} {r.fp:>4} {r.tn:>4} "
              f"{r.tpr:>7.2f} {r.tnr:>7.2f} {r.f1:>7.4f} {n_topics:>6} "
              f"{elapsed:>6.1f}")
    if args.out_dir:
        print(f"\nartifacts under {args.out_dir}/<variant>/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
