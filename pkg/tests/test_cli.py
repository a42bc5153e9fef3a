"""
Tests for the command-line surface
"""

import json

import pandas as pd
import pytest

from src.relcull.cli.context import sha256_of
from src.relcull.cli.main import run_cli
from src.relcull.services.dataset_store import load_dataset


def _run(*argv) -> int:
    return run_cli([str(arg) for arg in argv])


@pytest.fixture(scope="module")
def oracle_dirs(tmp_path_factory):
    """synth with its training config, then curate"""
    synth_dir = tmp_path_factory.mktemp("synth")
    curate_dir = tmp_path_factory.mktemp("curate")
    assert _run("synth", "--n-images", 1400, "--embed-dim", 50, "--out-dir", synth_dir) == 0
    assert (
        _run(
            "curate",
            "--dataset", synth_dir / "synthetic.jsonl",
            "--embeddings", synth_dir / "embeddings.txt",
            "--config", synth_dir / "synth.env",
            "--out-dir", curate_dir,
        )
        == 0
    )
    return synth_dir, curate_dir


def test_help_exits_zero(capsys):
    assert _run("--help") == 0
    assert "curate" in capsys.readouterr().out


def test_version_exits_zero():
    assert _run("--version") == 0


def test_unknown_subcommand(capsys):
    assert _run("frobnicate") == 1
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand():
    assert _run() == 1


def test_unknown_flag(tmp_path):
    assert _run("stats", "--dataset", tmp_path / "x.jsonl", "--bogus") == 1


def test_bad_k_list(tmp_path):
    assert _run("baseline", "--train", "a", "--test", "b", "--k", "0,5") == 1


def test_missing_config_file(tmp_path):
    assert _run("stats", "--dataset", tmp_path / "x.jsonl", "--config", tmp_path / "nope.env") == 1


def test_invalid_setting(tmp_path):
    assert _run("curate", "--dataset", "d", "--embeddings", "e", "--alpha", 1.5, "--out-dir", tmp_path) == 1


def test_missing_input_is_usage_error(tmp_path):
    assert _run("stats", "--dataset", tmp_path / "absent.jsonl", "--out-dir", tmp_path) == 1


def test_corrupt_dataset_is_data_error(tmp_path, capsys):
    path = tmp_path / "broken.jsonl"
    path.write_text("{not json\n", encoding="utf-8")
    assert _run("stats", "--dataset", path, "--out-dir", tmp_path / "out") == 2
    assert "error" in capsys.readouterr().err


def test_ingest_then_stats(vg_sources, tmp_path, capsys):
    out = tmp_path / "out"
    assert (
        _run(
            "ingest",
            "--objects", vg_sources["objects"],
            "--relationships", vg_sources["relationships"],
            "--attributes", vg_sources["attributes"],
            "--image-meta", vg_sources["image_meta"],
            "--out-dir", out,
        )
        == 0
    )
    assert load_dataset(out / "dataset.jsonl").n_triplets == 3
    report = json.loads((out / "ingest_report.json").read_text(encoding="utf-8"))
    assert report["multi_name_objects"] == 1

    capsys.readouterr()
    assert _run("stats", "--dataset", out / "dataset.jsonl", "--out-dir", tmp_path / "stats") == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["n_instances"] == 5
    assert printed["n_images"] == 2


def test_manifest_records_inputs(vg_sources, tmp_path):
    out = tmp_path / "out"
    assert (
        _run(
            "ingest",
            "--objects", vg_sources["objects"],
            "--relationships", vg_sources["relationships"],
            "--image-meta", vg_sources["image_meta"],
            "--seed", 7,
            "--out-dir", out,
        )
        == 0
    )
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "ingest"
    assert manifest["seed"] == 7
    assert manifest["inputs"][str(vg_sources["objects"])] == sha256_of(vg_sources["objects"])
    assert "dataset.jsonl" in manifest["outputs"]


def test_synth_writes_training_config(tmp_path):
    out = tmp_path / "synth"
    assert _run("synth", "--n-images", 5, "--embed-dim", 4, "--out-dir", out) == 0
    env = (out / "synth.env").read_text(encoding="utf-8")
    assert "RELCULL_EPOCHS=60" in env
    assert load_dataset(out / "synthetic.jsonl").predicate_vocab.labels == ("above", "heads", "left_of", "tails")


def test_synth_curate_report_end_to_end(oracle_dirs, tmp_path):
    _, curate_dir = oracle_dirs
    report = json.loads((curate_dir / "curation_report.json").read_text(encoding="utf-8"))
    assert [entry["predicate"] for entry in report["dropped"]] == ["above", "left_of"]
    assert load_dataset(curate_dir / "vrr.jsonl").predicate_vocab.labels == ("heads", "tails")
    manifest = json.loads((curate_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["settings"]["epochs"] == 60

    out = tmp_path / "report"
    assert _run("report", "--which", "curve", "--accuracy-report", curate_dir / "accuracy_report.json", "--out-dir", out) == 0
    curve = pd.read_csv(out / "predictability_curve.csv")
    assert curve["fraction"].iloc[0] == 1.0
    assert curve.loc[curve["threshold"] == 0.5, "fraction"].item() == 0.5


def test_report_compare(oracle_dirs, tmp_path):
    _, curate_dir = oracle_dirs
    accuracy = curate_dir / "accuracy_report.json"
    assert _run("report", "--which", "compare", "--reports", f"{accuracy},{accuracy}", "--out-dir", tmp_path) == 0
    frame = pd.read_csv(tmp_path / "predictability_comparison.csv")
    assert frame.columns[0] == "threshold"


def test_report_distributions(oracle_dirs, tmp_path):
    synth_dir, _ = oracle_dirs
    dataset = synth_dir / "synthetic.jsonl"
    assert _run("report", "--which", "dist", "--dataset", dataset, "--out-dir", tmp_path / "dist") == 0
    histogram = pd.read_csv(tmp_path / "dist" / "label_distribution.csv")
    assert set(histogram["label"]) == {"above", "heads", "left_of", "tails"}
    assert histogram["cumulative_share"].iloc[-1] == pytest.approx(1.0)

    assert _run("report", "--which", "cond", "--dataset", dataset, "--subject", "obj0", "--object", "obj1", "--out-dir", tmp_path / "cond") == 0
    assert (tmp_path / "cond" / "conditional_distribution.csv").exists()
    assert _run("report", "--which", "cond", "--dataset", dataset, "--out-dir", tmp_path / "bad") == 1


def test_curate_reports_are_byte_identical(tmp_path):
    synth_dir = tmp_path / "synth"
    assert _run("synth", "--n-images", 40, "--embed-dim", 50, "--out-dir", synth_dir) == 0
    reports = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert (
            _run(
                "curate",
                "--dataset", synth_dir / "synthetic.jsonl",
                "--embeddings", synth_dir / "embeddings.txt",
                "--epochs", 2,
                "--out-dir", out,
            )
            == 0
        )
        reports.append([(out / f).read_bytes() for f in ("curation_report.json", "accuracy_report.json", "vrr.jsonl")])
    assert reports[0] == reports[1]


def test_baseline_and_eval(tmp_path):
    synth_dir = tmp_path / "synth"
    assert _run("synth", "--n-images", 20, "--embed-dim", 4, "--out-dir", synth_dir) == 0
    dataset = synth_dir / "synthetic.jsonl"
    assert _run("baseline", "--train", dataset, "--test", dataset, "--k", "5,20", "--out-dir", tmp_path / "base") == 0
    recall = json.loads((tmp_path / "base" / "recall.json").read_text(encoding="utf-8"))
    assert list(recall) == ["5", "20"]
    assert recall["5"] <= recall["20"]

    # an empty prediction file matches nothing
    predictions = tmp_path / "predictions.jsonl"
    predictions.write_text("", encoding="utf-8")
    assert (
        _run("eval", "--dataset", dataset, "--predictions", predictions, "--mode", "predcls", "--k", "1", "--out-dir", tmp_path / "eval")
        == 0
    )
    assert json.loads((tmp_path / "eval" / "recall.json").read_text(encoding="utf-8")) == {"1": 0.0}


def test_cluster_and_vdnet_commands(tmp_path):
    synth_dir = tmp_path / "synth"
    assert _run("synth", "--n-images", 30, "--embed-dim", 50, "--out-dir", synth_dir) == 0
    dataset, embeddings = synth_dir / "synthetic.jsonl", synth_dir / "embeddings.txt"

    assert _run("cluster", "--dataset", dataset, "--embeddings", embeddings, "--out-dir", tmp_path / "cluster") == 0
    mapping = json.loads((tmp_path / "cluster" / "cluster_mapping.json").read_text(encoding="utf-8"))
    assert mapping == {label: [label] for label in ("above", "heads", "left_of", "tails")}

    train_dir = tmp_path / "train"
    assert _run("train-vdnet", "--dataset", dataset, "--embeddings", embeddings, "--epochs", 2, "--out-dir", train_dir) == 0
    assert len(pd.read_csv(train_dir / "loss_history.csv")) == 2

    eval_dir = tmp_path / "eval"
    assert (
        _run("eval-vdnet", "--dataset", dataset, "--embeddings", embeddings, "--checkpoint", train_dir / "vdnet.npz", "--out-dir", eval_dir)
        == 0
    )
    report = json.loads((eval_dir / "accuracy_report.json").read_text(encoding="utf-8"))
    assert 0.0 <= report["overall_accuracy"] <= 1.0


def test_train_heads_synthetic(tmp_path):
    out = tmp_path / "heads"
    assert _run("train-heads", "--synthetic", 4, "--epochs", 2, "--no-relation", "--out-dir", out) == 0
    assert (out / "heads.npz").exists()
    assert len(pd.read_csv(out / "heads_loss_history.csv")) == 2
    assert (out / "proposal_batches.jsonl").exists()

    again = tmp_path / "again"
    assert _run("train-heads", "--batches", out / "proposal_batches.jsonl", "--epochs", 1, "--out-dir", again) == 0

    resumed = tmp_path / "resumed"
    assert (
        _run("train-heads", "--batches", out / "proposal_batches.jsonl", "--resume", out / "heads.npz", "--epochs", 1, "--out-dir", resumed)
        == 0
    )
    assert len(pd.read_csv(resumed / "heads_loss_history.csv")) == 1


def test_train_heads_resume_layout_mismatch(tmp_path):
    first = tmp_path / "first"
    assert _run("train-heads", "--synthetic", 2, "--epochs", 1, "--out-dir", first) == 0
    wider = tmp_path / "wider"
    assert _run("train-heads", "--synthetic", 2, "--feature-dim", 8, "--epochs", 1, "--out-dir", wider) == 0
    assert (
        _run("train-heads", "--batches", wider / "proposal_batches.jsonl", "--resume", first / "heads.npz", "--out-dir", tmp_path / "bad")
        == 2
    )


def test_train_heads_needs_input(tmp_path):
    assert _run("train-heads", "--out-dir", tmp_path) == 1
