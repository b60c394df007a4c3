"""End-to-end command-line runs on a small on-disk corpus."""

from __future__ import annotations

import json
import os

import pytest

from topicguard import artifact, pipeline
from topicguard.cli import _read_predictions_csv, main
from topicguard.config import Variant
from topicguard.corpus import (AppRecord, DatasetSplit, SplitRole,
                               load_dataset, write_dataset)
from topicguard.embedding import load_embeddings

BUNDLE_FILES = ("report.json", "topics.json", "ccdf_npmi.csv",
                "ccdf_cv.csv", "coherence_f1_scatter.csv",
                "affinity_first.csv", "affinity_second.csv")


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture(scope="module")
def trained(cli_workspace, tmp_path_factory):
    """One bertdetect model + predictions file shared by the module."""
    root = str(tmp_path_factory.mktemp("cli_run"))
    model = os.path.join(root, "model.json")
    assert main(["train", "--variant", "bertdetect",
                 "--train", cli_workspace["train"],
                 "--embeddings", cli_workspace["embeddings"],
                 "--out", model, "--seed", "0", "--nu", "0.05"]) == 0
    preds = os.path.join(root, "preds.csv")
    assert main(["infer", "--model", model,
                 "--data", cli_workspace["test"],
                 "--embeddings", cli_workspace["embeddings"],
                 "--out", preds]) == 0
    return {"root": root, "model": model, "preds": preds}


# ---------------------------------------------------------------------------
# happy paths


def test_trained_model_loads(trained):
    detector = artifact.load_detector(trained["model"])
    assert detector.variant is Variant.BERTDETECT
    assert detector.n_topics() >= 2
    assert detector.config.nu == 0.05


def test_predictions_csv_shape(trained, cli_workspace):
    raw = _read(trained["preds"]).decode()
    lines = raw.strip().split("\r\n")
    assert lines[0] == "app_id,assigned_topic,score,verdict"
    n_test = len(load_dataset(cli_workspace["test"], SplitRole.TEST).records)
    assert len(lines) == n_test + 1
    for line in lines[1:]:
        _, topic, score, verdict = line.split(",")
        assert int(topic) >= 0
        float(score)
        assert verdict in ("benign", "malicious")


def test_predictions_round_trip_is_exact(trained, cli_workspace):
    detector = artifact.load_detector(trained["model"])
    data = load_dataset(cli_workspace["test"], SplitRole.TEST)
    emb = load_embeddings(cli_workspace["embeddings"])
    direct = pipeline.infer(detector, data.records, emb)
    loaded = _read_predictions_csv(trained["preds"])
    assert [p.app_id for p in loaded] == [p.app_id for p in direct]
    # repr round-trips float64 exactly
    assert [p.decision_score for p in loaded] == \
        [p.decision_score for p in direct]
    assert [p.verdict for p in loaded] == [p.verdict for p in direct]


def test_evaluate_full_bundle(trained, cli_workspace, tmp_path, capsys):
    out = os.path.join(tmp_path, "bundle")
    assert main(["evaluate", "--predictions", trained["preds"],
                 "--data", cli_workspace["test"], "--out-dir", out,
                 "--model", trained["model"],
                 "--train-data", cli_workspace["train"],
                 "--embeddings", cli_workspace["embeddings"]]) == 0
    captured = capsys.readouterr().out
    assert "TP " in captured and "F1 " in captured
    for name in BUNDLE_FILES + ("run_info.json",):
        assert os.path.exists(os.path.join(out, name)), name
    with open(os.path.join(out, "report.json"), encoding="utf-8") as fh:
        payload = json.load(fh)
    counts = payload["counts"]
    assert counts["tp"] + counts["fp"] + counts["tn"] + counts["fn"] == \
        payload["n_test"]
    n_test = len(load_dataset(cli_workspace["test"], SplitRole.TEST).records)
    assert payload["n_test"] == n_test
    assert payload["coherence"]["applicable"] is True
    assert payload["affinity"]["applicable"] is True
    assert payload["variant"] == "bertdetect"


def test_evaluate_without_model_is_minimal(trained, cli_workspace,
                                           tmp_path):
    out = os.path.join(tmp_path, "bundle")
    assert main(["evaluate", "--predictions", trained["preds"],
                 "--data", cli_workspace["test"], "--out-dir", out]) == 0
    with open(os.path.join(out, "report.json"), encoding="utf-8") as fh:
        payload = json.load(fh)
    assert payload["coherence"]["applicable"] is False
    assert payload["affinity"]["applicable"] is False
    assert "counts" in payload


def test_evaluate_model_without_train_data_skips_coherence(
        trained, cli_workspace, tmp_path):
    out = os.path.join(tmp_path, "bundle")
    assert main(["evaluate", "--predictions", trained["preds"],
                 "--data", cli_workspace["test"], "--out-dir", out,
                 "--model", trained["model"],
                 "--embeddings", cli_workspace["embeddings"]]) == 0
    with open(os.path.join(out, "report.json"), encoding="utf-8") as fh:
        payload = json.load(fh)
    assert payload["coherence"]["applicable"] is False
    assert payload["affinity"]["applicable"] is True


def test_report_command_writes_scatter(trained, cli_workspace, tmp_path):
    out = os.path.join(tmp_path, "bundle")
    assert main(["report", "--model", trained["model"],
                 "--predictions", trained["preds"],
                 "--data", cli_workspace["test"],
                 "--train-data", cli_workspace["train"],
                 "--out-dir", out,
                 "--embeddings", cli_workspace["embeddings"]]) == 0
    scatter = _read(os.path.join(out, "coherence_f1_scatter.csv"))
    assert scatter.count(b"\r\n") > 1  # header plus at least one topic


def test_coherence_command(trained, cli_workspace, tmp_path, capsys):
    out = os.path.join(tmp_path, "coh")
    assert main(["coherence", "--model", trained["model"],
                 "--train-data", cli_workspace["train"],
                 "--out-dir", out]) == 0
    assert "scored" in capsys.readouterr().out
    detector = artifact.load_detector(trained["model"])
    rows = _read(os.path.join(out, "coherence.csv")).decode() \
        .strip().split("\r\n")
    assert rows[0] == "topic_id,npmi,cv"
    assert len(rows) == detector.n_topics() + 1
    for row in rows[1:]:
        _, npmi, cv = row.split(",")
        assert -1.0 <= float(npmi) <= 1.0
        assert 0.0 <= float(cv) <= 1.0
    for name in ("ccdf_npmi.csv", "ccdf_cv.csv", "run_info.json"):
        assert os.path.exists(os.path.join(out, name))


def test_infer_empty_dataset_writes_header_only(trained, tmp_path, capsys):
    empty = os.path.join(tmp_path, "empty.jsonl")
    open(empty, "w").close()
    out = os.path.join(tmp_path, "preds.csv")
    assert main(["infer", "--model", trained["model"], "--data", empty,
                 "--out", out]) == 0
    assert "empty" in capsys.readouterr().err
    assert _read(out) == b"app_id,assigned_topic,score,verdict\r\n"


def test_config_file_with_flag_override(cli_workspace, tmp_path):
    cfg_path = os.path.join(tmp_path, "cfg.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump({"nu": 0.4, "seed": 3}, fh)
    model = os.path.join(tmp_path, "model.json")
    assert main(["train", "--variant", "ocsvm-only",
                 "--train", cli_workspace["train"], "--out", model,
                 "--config", cfg_path, "--nu", "0.05"]) == 0
    detector = artifact.load_detector(model)
    assert detector.config.nu == 0.05  # flag beats config file
    assert detector.config.seed == 3
    assert detector.manifest["nu"] == 0.05


def test_tune_nu_cli(cli_workspace, tmp_path, capsys):
    model = os.path.join(tmp_path, "model.json")
    assert main(["train", "--variant", "ocsvm-only",
                 "--train", cli_workspace["train"], "--out", model,
                 "--validation", cli_workspace["test"],
                 "--tune-nu", "--seed", "0"]) == 0
    assert "tuned nu" in capsys.readouterr().out
    tuned = artifact.load_detector(model).manifest["tuned"]
    assert set(tuned["grid"]) == {"0.02", "0.05", "0.1", "0.15", "0.2",
                                 "0.3"}
    assert str(f"{tuned['chosen']:g}") in tuned["grid"]
    assert tuned["validation_f1"] == max(tuned["grid"].values())


def test_write_embeddings_round_trip(cli_workspace, tmp_path):
    out = os.path.join(tmp_path, "vecs.bin")
    assert main(["write-embeddings", "--data", cli_workspace["test"],
                 "--out", out, "--dim", "32", "--seed", "5"]) == 0
    emb = load_embeddings(out)
    assert emb.dim == 32
    data = load_dataset(cli_workspace["test"], SplitRole.TEST)
    assert set(emb.vectors) == {r.app_id for r in data.records}
    again = os.path.join(tmp_path, "vecs2.bin")
    assert main(["write-embeddings", "--data", cli_workspace["test"],
                 "--out", again, "--dim", "32", "--seed", "5"]) == 0
    assert _read(out) == _read(again)


# ---------------------------------------------------------------------------
# determinism


def test_retraining_is_byte_identical(trained, cli_workspace, tmp_path):
    model2 = os.path.join(tmp_path, "model2.json")
    assert main(["train", "--variant", "bertdetect",
                 "--train", cli_workspace["train"],
                 "--embeddings", cli_workspace["embeddings"],
                 "--out", model2, "--seed", "0", "--nu", "0.05"]) == 0
    assert _read(trained["model"]) == _read(model2)
    preds2 = os.path.join(tmp_path, "preds2.csv")
    assert main(["infer", "--model", model2,
                 "--data", cli_workspace["test"],
                 "--embeddings", cli_workspace["embeddings"],
                 "--out", preds2]) == 0
    assert _read(trained["preds"]) == _read(preds2)


def test_report_artifacts_deterministic_except_run_info(
        trained, cli_workspace, tmp_path):
    outs = []
    for tag in ("one", "two"):
        out = os.path.join(tmp_path, tag)
        assert main(["evaluate", "--predictions", trained["preds"],
                     "--data", cli_workspace["test"], "--out-dir", out,
                     "--model", trained["model"],
                     "--train-data", cli_workspace["train"],
                     "--embeddings", cli_workspace["embeddings"]]) == 0
        outs.append(out)
    assert sorted(os.listdir(outs[0])) == sorted(os.listdir(outs[1]))
    for name in sorted(os.listdir(outs[0])):
        if name == "run_info.json":
            continue
        assert _read(os.path.join(outs[0], name)) == \
            _read(os.path.join(outs[1], name)), name


# ---------------------------------------------------------------------------
# exit codes


def test_usage_errors_exit_1(cli_workspace, tmp_path, capsys):
    assert main([]) == 1
    assert main(["train", "--variant", "bertdetect",
                 "--out", os.path.join(tmp_path, "m.json")]) == 1
    # embedding variants refuse to train without an embedding file
    assert main(["train", "--variant", "bertdetect",
                 "--train", cli_workspace["train"],
                 "--out", os.path.join(tmp_path, "m.json")]) == 1
    err = capsys.readouterr().err
    assert "--embeddings" in err
    assert main(["train", "--variant", "sideways",
                 "--train", cli_workspace["train"],
                 "--out", os.path.join(tmp_path, "m.json")]) == 1
    assert main(["train", "--variant", "ocsvm-only",
                 "--train", cli_workspace["train"],
                 "--out", os.path.join(tmp_path, "m.json"),
                 "--validation", cli_workspace["test"]]) == 1
    assert main(["train", "--variant", "ocsvm-only",
                 "--train", cli_workspace["train"],
                 "--out", os.path.join(tmp_path, "m.json"),
                 "--tune-nu"]) == 1
    assert main(["report", "--model", "m", "--predictions", "p",
                 "--data", "d", "--out-dir", "o"]) == 1  # no --train-data


def test_infer_without_embeddings_for_bert_exits_1(trained, cli_workspace,
                                                   tmp_path, capsys):
    rc = main(["infer", "--model", trained["model"],
               "--data", cli_workspace["test"],
               "--out", os.path.join(tmp_path, "p.csv")])
    assert rc == 1
    assert "embeddings" in capsys.readouterr().err


def test_coherence_on_topicless_model_exits_1(cli_workspace, tmp_path,
                                              capsys):
    model = os.path.join(tmp_path, "ocsvm.json")
    assert main(["train", "--variant", "ocsvm-only",
                 "--train", cli_workspace["train"], "--out", model,
                 "--nu", "0.1"]) == 0
    rc = main(["coherence", "--model", model,
               "--train-data", cli_workspace["train"],
               "--out-dir", os.path.join(tmp_path, "coh")])
    assert rc == 1
    assert "no topics" in capsys.readouterr().err


def test_data_errors_exit_2(trained, cli_workspace, tmp_path, capsys):
    out = os.path.join(tmp_path, "p.csv")
    assert main(["infer", "--model", os.path.join(tmp_path, "ghost.json"),
                 "--data", cli_workspace["test"], "--out", out]) == 2

    bad_model = os.path.join(tmp_path, "future.json")
    with open(bad_model, "w", encoding="utf-8") as fh:
        json.dump({"schema_version": 99}, fh)
    assert main(["infer", "--model", bad_model,
                 "--data", cli_workspace["test"], "--out", out]) == 2

    bad_data = os.path.join(tmp_path, "bad.jsonl")
    with open(bad_data, "w", encoding="utf-8") as fh:
        fh.write('{"app_id": "a", "description": "d", "api_calls": []}\n')
        fh.write("not json\n")
    assert main(["train", "--variant", "ocsvm-only", "--train", bad_data,
                 "--out", os.path.join(tmp_path, "m.json")]) == 2
    assert ":2:" in capsys.readouterr().err


@pytest.mark.parametrize("content,message", [
    ("", "empty predictions"),
    ("app_id,assigned_topic,score\r\na,0,1.0\r\n", "missing columns"),
    ("app_id,assigned_topic,score,verdict\r\na,0,abc,benign\r\n",
     "bad numeric"),
    ("app_id,assigned_topic,score,verdict\r\na,0,1.0,sus\r\n",
     "verdict must be"),
    ("app_id,assigned_topic,score,verdict\r\na,0,-1.0,benign\r\n",
     "inconsistent"),
])
def test_malformed_predictions_exit_2(cli_workspace, tmp_path, capsys,
                                      content, message):
    preds = os.path.join(tmp_path, "preds.csv")
    with open(preds, "w", encoding="utf-8", newline="") as fh:
        fh.write(content)
    rc = main(["evaluate", "--predictions", preds,
               "--data", cli_workspace["test"],
               "--out-dir", os.path.join(tmp_path, "out")])
    assert rc == 2
    assert message in capsys.readouterr().err


def test_prediction_coverage_gap_exits_2(trained, cli_workspace, tmp_path,
                                         capsys):
    truncated = os.path.join(tmp_path, "short.csv")
    lines = _read(trained["preds"]).decode().strip().split("\r\n")
    with open(truncated, "w", encoding="utf-8", newline="") as fh:
        fh.write("\r\n".join(lines[:-1]) + "\r\n")
    rc = main(["evaluate", "--predictions", truncated,
               "--data", cli_workspace["test"],
               "--out-dir", os.path.join(tmp_path, "out")])
    assert rc == 2
    assert "lack predictions" in capsys.readouterr().err


def test_unlabelled_data_fails_evaluation(trained, tmp_path, capsys):
    records = [AppRecord(app_id=f"u{i}", description="some words",
                         api_calls=frozenset({"api.a"}), label=None)
               for i in range(3)]
    data_path = os.path.join(tmp_path, "unlabelled.jsonl")
    write_dataset(DatasetSplit(role=SplitRole.TEST, records=records),
                  data_path)
    preds = os.path.join(tmp_path, "p.csv")
    with open(preds, "w", encoding="utf-8", newline="") as fh:
        fh.write("app_id,assigned_topic,score,verdict\r\n")
        for i in range(3):
            fh.write(f"u{i},0,1.0,benign\r\n")
    rc = main(["evaluate", "--predictions", preds, "--data", data_path,
               "--out-dir", os.path.join(tmp_path, "out")])
    assert rc == 2
    assert "no label" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_zero_topics_exits_3(tmp_path, capsys):
    records = [
        AppRecord(app_id="a", description="alpha words about weather",
                  api_calls=frozenset({"api.a"}), label="benign"),
        AppRecord(app_id="b", description="beta words about cooking",
                  api_calls=frozenset({"api.b"}), label="benign"),
        AppRecord(app_id="c", description="gamma words about travel",
                  api_calls=frozenset({"api.c"}), label="benign"),
    ]
    data_path = os.path.join(tmp_path, "tiny.jsonl")
    write_dataset(DatasetSplit(role=SplitRole.TRAIN, records=records),
                  data_path)
    emb_path = os.path.join(tmp_path, "tiny.bin")
    assert main(["write-embeddings", "--data", data_path,
                 "--out", emb_path, "--dim", "16", "--seed", "1"]) == 0
    # the root is the only group of min_cluster_size points, and the root
    # is never selectable, so extraction must come up empty
    rc = main(["train", "--variant", "bertdetect", "--train", data_path,
               "--embeddings", emb_path,
               "--out", os.path.join(tmp_path, "m.json"),
               "--min-cluster-size", "3", "--min-samples", "2"])
    assert rc == 3
    assert "zero topics" in capsys.readouterr().err
