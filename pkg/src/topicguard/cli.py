"""Command-line interface.

Commands: train, infer, evaluate, coherence, write-embeddings, report.
Exit codes: 1 usage or configuration error, 2 data error, 3 numeric
failure.  Every command honors --seed and produces byte-identical outputs
for identical inputs (timestamps go to run_info.json, never into report
artifacts or models).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone

from . import artifact, pipeline, report as report_mod
from .coherence import ccdf
from .config import (RunConfig, Variant, load_config_file, parse_variant)
from .corpus import (DatasetSplit, SplitRole, load_dataset, load_stopwords,
                     tokenize_split, MALICIOUS, BENIGN)
from .embedding import embed_docs, load_embeddings, write_embeddings
from .errors import ConfigError, DataError, TopicGuardError


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, for exit-code control."""

    def error(self, message):
        raise ConfigError(message)


_CONFIG_FLAGS: list[tuple[str, str, type]] = [
    ("--seed", "seed", int),
    ("--n-neighbors", "n_neighbors", int),
    ("--umap-dim", "umap_dim", int),
    ("--min-dist", "min_dist", float),
    ("--epochs", "epochs", int),
    ("--min-cluster-size", "min_cluster_size", int),
    ("--min-samples", "min_samples", int),
    ("--topics", "n_topics", int),
    ("--clusters", "n_clusters", int),
    ("--lda-alpha", "lda_alpha", float),
    ("--lda-beta", "lda_beta", float),
    ("--lda-iterations", "lda_iterations", int),
    ("--fold-in-iterations", "fold_in_iterations", int),
    ("--nu", "nu", float),
    ("--gamma", "gamma", float),
    ("--kernel", "kernel", str),
    ("--min-topic-train", "min_topic_train", int),
    ("--npmi-window", "npmi_window", int),
    ("--cv-window", "cv_window", int),
    ("--top-n", "top_n", int),
    ("--coherence-eps", "coherence_eps", float),
    ("--threads", "threads", int),
]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None,
                        help="JSON file of config fields; flags override it")
    for flag, dest, typ in _CONFIG_FLAGS:
        parser.add_argument(flag, dest=dest, type=typ, default=None)


def _build_config(args: argparse.Namespace,
                  variant: Variant | None) -> RunConfig:
    merged: dict = {}
    if getattr(args, "config", None):
        merged.update(load_config_file(args.config))
    for _, dest, _typ in _CONFIG_FLAGS:
        value = getattr(args, dest, None)
        if value is not None:
            merged[dest] = value
    if variant is not None:
        merged["variant"] = variant.value
    return RunConfig.from_dict(merged)


def _make_parser() -> _Parser:
    parser = _Parser(prog="topicguard",
                     description="Topic-conditioned outlier detection for "
                                 "app store metadata")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a detector", parents=[])
    p.add_argument("--variant", required=True)
    p.add_argument("--train", required=True, dest="train_path")
    p.add_argument("--out", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--validation", default=None)
    p.add_argument("--tune-nu", action="store_true")
    _add_config_flags(p)

    p = sub.add_parser("infer", help="score apps with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="confusion counts and report bundle")
    p.add_argument("--predictions", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--train-data", default=None)
    p.add_argument("--embeddings", default=None)

    p = sub.add_parser("coherence", help="per-topic NPMI and Cv")
    p.add_argument("--model", required=True)
    p.add_argument("--train-data", required=True)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("report", help="full bundle: evaluation + coherence")
    p.add_argument("--model", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--train-data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--embeddings", default=None)

    p = sub.add_parser("write-embeddings",
                       help="hashed bag-of-words embedding file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)

    return parser


def _load_embeddings_if(path: str | None):
    return load_embeddings(path) if path else None


def _write_run_info(out_dir: str, argv: list[str]) -> None:
    info = {
        "argv": argv,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(os.path.join(out_dir, "run_info.json"), "w",
              encoding="utf-8") as fh:
        fh.write(json.dumps(info, sort_keys=True, indent=1) + "\n")


def cmd_train(args: argparse.Namespace) -> int:
    variant = parse_variant(args.variant)
    config = _build_config(args, variant)
    needs_embeddings = variant in (Variant.BERTDETECT, Variant.GCATA)
    if needs_embeddings and not args.embeddings:
        raise ConfigError(f"variant {variant.value!r} requires --embeddings")
    train_split = load_dataset(args.train_path, SplitRole.TRAIN)
    for warning in train_split.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    embeddings = _load_embeddings_if(args.embeddings)
    if args.tune_nu:
        if not args.validation:
            raise ConfigError("--tune-nu requires --validation")
        validation = load_dataset(args.validation, SplitRole.VALIDATION)
        detector = pipeline.tune_nu(variant, train_split, embeddings,
                                    config, validation)
    else:
        if args.validation:
            raise ConfigError("--validation is only used with --tune-nu")
        detector = pipeline.train(variant, train_split, embeddings, config)
    artifact.save_detector(detector, args.out)
    n_topics = detector.n_topics()
    if variant is Variant.OCSVM_ONLY:
        print("topics: none (single global detector)")
    else:
        print(f"topics: {n_topics}")
        sizes: dict[int, int] = {}
        if isinstance(detector.topic_stage, pipeline.BertTopicStage):
            for label in detector.topic_stage.train_labels:
                sizes[int(label)] = sizes.get(int(label), 0) + 1
        for topic in sorted(detector.detectors):
            size = sizes.get(topic)
            suffix = f" ({size} train apps)" if size is not None else ""
            print(f"  topic {topic}: dedicated detector{suffix}")
    if detector.manifest.get("tuned"):
        tuned = detector.manifest["tuned"]
        print(f"tuned nu = {tuned['chosen']} "
              f"(validation F1 {tuned['validation_f1']:.4f})")
    return 0


def _write_predictions_csv(path: str,
                           predictions: list[pipeline.Prediction]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["app_id", "assigned_topic", "score", "verdict"])
        for p in predictions:
            writer.writerow([p.app_id, p.assigned_topic,
                             repr(p.decision_score), p.verdict])


def _read_predictions_csv(path: str) -> list[pipeline.Prediction]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise DataError(f"{path}: empty predictions file")
            required = {"app_id", "assigned_topic", "score", "verdict"}
            missing = required - set(reader.fieldnames)
            if missing:
                raise DataError(f"{path}: missing columns "
                                f"{sorted(missing)}")
            out = []
            for line_no, row in enumerate(reader, start=2):
                try:
                    topic = int(row["assigned_topic"])
                    score = float(row["score"])
                except (TypeError, ValueError) as exc:
                    raise DataError(f"{path}:{line_no}: bad numeric field: "
                                    f"{exc}") from exc
                verdict = row["verdict"]
                if verdict not in (BENIGN, MALICIOUS):
                    raise DataError(f"{path}:{line_no}: verdict must be "
                                    f"benign or malicious, got {verdict!r}")
                if (score < 0.0) != (verdict == MALICIOUS):
                    raise DataError(f"{path}:{line_no}: verdict {verdict!r} "
                                    f"inconsistent with score {score!r}")
                out.append(pipeline.Prediction(
                    app_id=row["app_id"], assigned_topic=topic,
                    decision_score=score, verdict=verdict))
            return out
    except OSError as exc:
        raise DataError(f"cannot read predictions {path}: {exc}") from exc


def cmd_infer(args: argparse.Namespace) -> int:
    detector = artifact.load_detector(args.model)
    data = load_dataset(args.data, SplitRole.TEST)
    for warning in data.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    embeddings = _load_embeddings_if(args.embeddings)
    predictions = pipeline.infer(detector, data.records, embeddings)
    _write_predictions_csv(args.out, predictions)
    print(f"wrote {len(predictions)} predictions to {args.out}")
    return 0


def _coherence_inputs(detector, train_data_path: str):
    train_split = load_dataset(train_data_path, SplitRole.TRAIN)
    docs = tokenize_split(train_split, load_stopwords())
    return report_mod.compute_coherence(detector, docs)


def _evaluate_common(args: argparse.Namespace, require_model: bool) -> int:
    predictions = _read_predictions_csv(args.predictions)
    data = load_dataset(args.data, SplitRole.TEST)
    unlabelled = [r.app_id for r in data.records if r.label is None]
    if unlabelled:
        raise DataError(f"{len(unlabelled)} apps have no label (first: "
                        f"{unlabelled[0]!r}); evaluation needs ground truth")
    result = pipeline.evaluate(predictions, data.records)

    detector = None
    scores = None
    affinities = None
    if args.model:
        detector = artifact.load_detector(args.model)
        if detector.variant is not Variant.OCSVM_ONLY:
            if args.train_data:
                scores = _coherence_inputs(detector, args.train_data)
            elif require_model:
                raise ConfigError("report requires --train-data for "
                                  "coherence")
            embeddings = _load_embeddings_if(args.embeddings)
            needs = detector.variant in (Variant.BERTDETECT, Variant.GCATA)
            if not needs or embeddings is not None:
                _, affinities = pipeline.assign_topics(detector,
                                                       data.records,
                                                       embeddings)
    elif require_model:
        raise ConfigError("report requires --model")

    report_mod.write_report_bundle(args.out_dir, result, detector, scores,
                                   affinities)
    _write_run_info(args.out_dir, sys.argv[1:])
    print(f"TP {result.tp}  FP {result.fp}  TN {result.tn}  "
          f"FN {result.fn}")
    print(f"TPR {result.tpr:.2f}%  TNR {result.tnr:.2f}%  "
          f"F1 {result.f1:.4f}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    return _evaluate_common(args, require_model=False)


def cmd_report(args: argparse.Namespace) -> int:
    return _evaluate_common(args, require_model=True)


def cmd_coherence(args: argparse.Namespace) -> int:
    detector = artifact.load_detector(args.model)
    scores = _coherence_inputs(detector, args.train_data)
    os.makedirs(args.out_dir, exist_ok=True)
    report_mod.write_csv(
        os.path.join(args.out_dir, "coherence.csv"),
        ["topic_id", "npmi", "cv"],
        [[s.topic_id, float(s.npmi), float(s.cv)] for s in scores])
    report_mod.write_csv(
        os.path.join(args.out_dir, "ccdf_npmi.csv"),
        ["threshold", "fraction"],
        [[float(t), float(f)] for t, f in
         ccdf([s.npmi for s in scores], report_mod.NPMI_THRESHOLDS)])
    report_mod.write_csv(
        os.path.join(args.out_dir, "ccdf_cv.csv"),
        ["threshold", "fraction"],
        [[float(t), float(f)] for t, f in
         ccdf([s.cv for s in scores], report_mod.CV_THRESHOLDS)])
    _write_run_info(args.out_dir, sys.argv[1:])
    print(f"scored {len(scores)} topics")
    return 0


def cmd_write_embeddings(args: argparse.Namespace) -> int:
    data = load_dataset(args.data, SplitRole.TEST)
    for warning in data.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    docs = tokenize_split(data, load_stopwords())
    matrix = embed_docs(docs, args.dim, args.seed)
    items = [(doc.app_id, matrix.vectors[doc.app_id]) for doc in docs]
    write_embeddings(args.out, args.dim, items)
    print(f"wrote {len(items)} vectors (dim {args.dim}) to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _make_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "train": cmd_train,
            "infer": cmd_infer,
            "evaluate": cmd_evaluate,
            "coherence": cmd_coherence,
            "report": cmd_report,
            "write-embeddings": cmd_write_embeddings,
        }[args.command]
        return handler(args)
    except TopicGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def entry() -> None:
    sys.exit(main())
