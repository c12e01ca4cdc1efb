"""End-to-end CLI behavior: commands, files, exit codes, reproducibility."""

import hashlib
import json

import numpy as np
import pytest

from qosgp.cli import main
from qosgp.data import read_dataset_csv

CONFIG = """\
[experiment]
replications = 2
master_seed = 5

[simulator]
num_classes = 2
arrival_prob = 0.6
lognormal_mu = 0.2, 0.4
lognormal_sigma = 0.3, 0.2
execution_rates = 1.0, 1.2
window = 4
num_train = 30
num_test = 20

[gp]
max_iterations = 6
restarts = 0
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(CONFIG)
    return path


def read_manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())["files"]


def test_simulate_writes_traces_and_datasets(config_path, tmp_path, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(config_path), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "replication 0:" in stdout and "replication 1:" in stdout
    assert "samples=" in stdout
    for r in (0, 1):
        assert (out / f"trace_{r:03d}.csv").is_file()
        dataset = read_dataset_csv(out / f"dataset_{r:03d}.csv")
        assert dataset.dim == 2
        assert len(dataset) >= 50
    manifest = read_manifest(out)
    assert set(manifest) == {
        "trace_000.csv", "dataset_000.csv", "trace_001.csv", "dataset_001.csv",
    }
    for name, digest in manifest.items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest


def test_simulate_is_reproducible(config_path, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--config", str(config_path), "--out", str(out_a)])
    main(["simulate", "--config", str(config_path), "--out", str(out_b)])
    assert (out_a / "manifest.json").read_bytes() == (out_b / "manifest.json").read_bytes()


def test_simulate_seed_override_changes_output(config_path, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--config", str(config_path), "--out", str(out_a)])
    main(["simulate", "--config", str(config_path), "--out", str(out_b), "--seed", "77"])
    assert (out_a / "dataset_000.csv").read_bytes() != (out_b / "dataset_000.csv").read_bytes()


def test_train_then_predict_round_trip(config_path, tmp_path, capsys):
    out = tmp_path / "work"
    main(["simulate", "--config", str(config_path), "--out", str(out)])
    dataset_csv = out / "dataset_000.csv"

    code = main([
        "train", str(dataset_csv), "--config", str(config_path),
        "--kernel", "linear", "--out", str(out),
    ])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "initial lml = " in stdout
    assert "final lml = " in stdout
    assert "noise_variance = " in stdout
    assert "a_1 = " in stdout and "a_2 = " in stdout
    model_path = out / "model_linear.json"
    assert model_path.is_file()

    inputs = out / "inputs.csv"
    inputs.write_text("x_1,x_2\n0.5,1.0\n2.0,0.0\n")
    code = main(["predict", str(model_path), str(inputs), "--out", str(out)])
    assert code == 0
    assert "2 predictions" in capsys.readouterr().out
    lines = (out / "predictions.csv").read_text().splitlines()
    assert lines[0] == "x_1,x_2,mean,variance"
    assert len(lines) == 3
    row = lines[1].split(",")
    assert float(row[3]) >= 0.0  # variance


def test_predict_accepts_empty_input(config_path, tmp_path, capsys):
    out = tmp_path / "work"
    main(["simulate", "--config", str(config_path), "--out", str(out)])
    main([
        "train", str(out / "dataset_000.csv"), "--config", str(config_path),
        "--kernel", "linear", "--out", str(out),
    ])
    capsys.readouterr()
    inputs = out / "empty.csv"
    inputs.write_text("x_1,x_2\n")
    assert main(["predict", str(out / "model_linear.json"), str(inputs), "--out", str(out)]) == 0
    assert "0 predictions" in capsys.readouterr().out
    assert (out / "predictions.csv").read_text().splitlines() == ["x_1,x_2,mean,variance"]


def test_train_unknown_kernel_lists_choices(config_path, tmp_path, capsys):
    out = tmp_path / "work"
    main(["simulate", "--config", str(config_path), "--out", str(out)])
    capsys.readouterr()
    code = main([
        "train", str(out / "dataset_000.csv"), "--config", str(config_path),
        "--kernel", "rbf", "--out", str(out),
    ])
    assert code == 2
    err = capsys.readouterr().err
    assert "rbf" in err
    assert "linear, se, composite" in err


def test_benchmark_writes_report_and_verdicts(config_path, tmp_path, capsys):
    out = tmp_path / "bench"
    code = main(["benchmark", "--config", str(config_path), "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "mae t-test (gp-linear vs cart):" in stdout
    assert "mse t-test (gp-linear vs cart):" in stdout
    report = json.loads((out / "report.json").read_text())
    assert report["replications"] == 2
    assert report["methods"] == ["gp-linear", "gp-se", "gp-composite", "cart"]
    metrics = (out / "metrics.csv").read_text().splitlines()
    assert metrics[0] == "replication,method,mae,mse"
    assert len(metrics) == 1 + 2 * 4
    for r in (0, 1):
        rep_dir = out / f"rep_{r:03d}"
        assert (rep_dir / "test.csv").is_file()
        for method in ("gp-linear", "gp-se", "gp-composite", "cart"):
            pred = (rep_dir / f"pred_{method}.csv").read_text().splitlines()
            assert pred[0] == "x_1,x_2,mean,variance"
            assert len(pred) == 21
        assert pred[1].endswith(",nan")  # CART carries no variance
    manifest = read_manifest(out)
    assert "report.json" in manifest
    assert "rep_001/pred_cart.csv" in manifest


def test_benchmark_single_replication_verdict(config_path, tmp_path, capsys):
    single = tmp_path / "single.cfg"
    single.write_text(CONFIG.replace("replications = 2", "replications = 1"))
    out = tmp_path / "bench1"
    assert main(["benchmark", "--config", str(single), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "not applicable (fewer than 2 replications)" in stdout
    report = json.loads((out / "report.json").read_text())
    assert report["t_tests"]["mae_gp_linear_vs_cart"] is None


def test_missing_config_exits_2(tmp_path, capsys):
    code = main(["simulate", "--config", str(tmp_path / "missing.cfg")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_invalid_config_value_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(CONFIG.replace("arrival_prob = 0.6", "arrival_prob = 2.0"))
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "arrival_prob" in capsys.readouterr().err


def test_missing_dataset_exits_2(config_path, tmp_path, capsys):
    code = main([
        "train", str(tmp_path / "missing.csv"), "--config", str(config_path),
        "--kernel", "linear", "--out", str(tmp_path / "o"),
    ])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_numerical_failure_exits_3(config_path, tmp_path, capsys):
    bad_csv = tmp_path / "explosive.csv"
    bad_csv.write_text("x_1,y\n1.0,1e200\n2.0,1e200\n3.0,1e200\n")
    with np.errstate(over="ignore"):
        code = main([
            "train", str(bad_csv), "--config", str(config_path),
            "--kernel", "linear", "--out", str(tmp_path / "o"),
        ])
    assert code == 3
    assert "error:" in capsys.readouterr().err


def test_report_metrics_recomputable_from_prediction_files(config_path, tmp_path):
    out = tmp_path / "bench"
    assert main(["benchmark", "--config", str(config_path), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    for r in (0, 1):
        rep_dir = out / f"rep_{r:03d}"
        truths = read_dataset_csv(rep_dir / "test.csv").y
        for method in report["methods"]:
            rows = (rep_dir / f"pred_{method}.csv").read_text().splitlines()[1:]
            means = np.array([float(row.split(",")[-2]) for row in rows])
            assert report["metrics"][method]["mae"][r] == pytest.approx(
                float(np.mean(np.abs(means - truths))), rel=1e-12
            )
            assert report["metrics"][method]["mse"][r] == pytest.approx(
                float(np.mean((means - truths) ** 2)), rel=1e-12
            )
