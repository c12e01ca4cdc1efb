"""Command-line interface: simulate | train | predict | benchmark.

All output files are written atomically (temp file + rename) and contain
no timestamps or machine-specific content, so a rerun with identical
inputs produces byte-identical files.  A manifest.json with SHA-256
checksums accompanies multi-file outputs.  Exit codes: 0 success, 2 for
configuration or input errors, 3 for runtime/numerical/resource errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .benchmark import metrics_csv_text, report_to_dict, run_benchmark
from .config import ExperimentConfig, load_experiment_config
from .data import _fmt, read_dataset_csv, read_feature_csv, write_dataset_csv
from .errors import ConfigError, NumericalError, SimulationLimitError
from .gp import (
    OptimizerOptions,
    fit,
    load_model,
    log_marginal_likelihood,
    optimize_hyperparameters,
    predict_batch,
    save_model,
)
from .kernels import default_kernel, param_names
from .seeds import STREAM_OPT, STREAM_SIM, substream_seed
from .simulator import extract_dataset, run, write_trace_csv


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args.handler(args)
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, SimulationLimitError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qosgp",
        description="QoS latency prediction: queueing simulation, GP regression, CART baseline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="run replicated simulations, export traces and datasets")
    simulate.add_argument("--config", required=True, help="experiment config file")
    simulate.add_argument("--out", help="output directory (default: config output_dir)")
    simulate.add_argument("--seed", type=int, help="override the config master_seed")
    simulate.set_defaults(handler=cmd_simulate)

    train = sub.add_parser("train", help="fit GP hyperparameters on a dataset CSV")
    train.add_argument("dataset", help="dataset CSV (x_1,...,x_D,y)")
    train.add_argument("--config", required=True)
    train.add_argument("--kernel", required=True, help="kernel name from the config")
    train.add_argument("--out", help="output directory (default: config output_dir)")
    train.add_argument("--seed", type=int, help="override the config master_seed")
    train.set_defaults(handler=cmd_train)

    predict = sub.add_parser("predict", help="predict mean/variance for feature rows")
    predict.add_argument("model", help="model JSON written by train")
    predict.add_argument("inputs", help="feature CSV (x_1,...,x_D)")
    predict.add_argument("--out", default=".", help="output directory (default: .)")
    predict.set_defaults(handler=cmd_predict)

    benchmark = sub.add_parser("benchmark", help="replicated GP vs CART comparison")
    benchmark.add_argument("--config", required=True)
    benchmark.add_argument("--out", help="output directory (default: config output_dir)")
    benchmark.add_argument("--seed", type=int, help="override the config master_seed")
    benchmark.add_argument("--jobs", type=int, default=1, help="parallel replication workers")
    benchmark.set_defaults(handler=cmd_benchmark)

    return parser


def _load_config(args) -> ExperimentConfig:
    config = load_experiment_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, master_seed=args.seed)
    return config


def _out_dir(args, config: ExperimentConfig | None = None) -> Path:
    out = args.out or (config.output_dir if config else ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _atomic_write_with(path: Path, writer) -> None:
    """Run a (path -> None) writer against a temp file, then rename."""
    tmp = path.with_name(path.name + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


def _write_manifest(out: Path, files: list[Path]) -> None:
    digests = {}
    for file in sorted(files):
        digests[str(file.relative_to(out))] = hashlib.sha256(file.read_bytes()).hexdigest()
    _atomic_write_text(out / "manifest.json", json.dumps({"files": digests}, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> None:
    config = _load_config(args)
    out = _out_dir(args, config)
    written: list[Path] = []
    for r in range(config.replications):
        sim_cfg = dataclasses.replace(
            config.simulator, seed=substream_seed(config.master_seed, STREAM_SIM, r)
        )
        trace = run(sim_cfg)
        dataset = extract_dataset(trace, sim_cfg.window)
        trace_path = out / f"trace_{r:03d}.csv"
        dataset_path = out / f"dataset_{r:03d}.csv"
        _atomic_write_with(trace_path, lambda p, t=trace: write_trace_csv(t, p))
        _atomic_write_with(dataset_path, lambda p, d=dataset: write_dataset_csv(d, p))
        written += [trace_path, dataset_path]
        print(
            f"replication {r}: arrivals={trace.arrivals} "
            f"completions={len(trace.completed)} samples={len(dataset)}"
        )
    _write_manifest(out, written)


def cmd_train(args) -> None:
    config = _load_config(args)
    names = [k.variant.value for k in config.kernels]
    if args.kernel not in names:
        raise ValueError(
            f"unknown kernel {args.kernel!r}; available: {', '.join(names)}"
        )
    dataset = read_dataset_csv(args.dataset)
    kernel = default_kernel(args.kernel, dataset.dim)
    options = OptimizerOptions(
        max_iterations=config.gp.max_iterations,
        tolerance=config.gp.tolerance,
        restarts=config.gp.restarts,
        learn_noise=config.gp.learn_noise,
        seed=substream_seed(config.master_seed, STREAM_OPT, 0, names.index(args.kernel)),
    )
    initial_lml = log_marginal_likelihood(fit(dataset, kernel, config.gp.noise_variance))
    optimized, noise, final_lml = optimize_hyperparameters(
        dataset, kernel, config.gp.noise_variance, options
    )
    model = fit(dataset, optimized, noise)
    out = _out_dir(args, config)
    model_path = out / f"model_{args.kernel}.json"
    _atomic_write_with(model_path, lambda p: save_model(model, p))
    print(f"initial lml = {_fmt(initial_lml)}")
    print(f"final lml = {_fmt(final_lml)}")
    print(f"noise_variance = {_fmt(noise)}")
    for name, value in zip(
        param_names(optimized.variant, optimized.input_dim),
        np.exp(optimized.log_params),
    ):
        print(f"{name} = {_fmt(value)}")
    print(f"model written to {model_path}")


def cmd_predict(args) -> None:
    model = load_model(args.model)
    X = read_feature_csv(args.inputs, model.kernel.input_dim)
    means, variances = predict_batch(model, X)
    dim = model.kernel.input_dim
    lines = [",".join(f"x_{d + 1}" for d in range(dim)) + ",mean,variance"]
    for row, mean, variance in zip(X, means, variances):
        features = ",".join(_fmt(v) for v in row)
        lines.append(f"{features},{_fmt(mean)},{_fmt(variance)}")
    out = _out_dir(args)
    path = out / "predictions.csv"
    _atomic_write_text(path, "\n".join(lines) + "\n")
    print(f"{len(means)} predictions written to {path}")


def cmd_benchmark(args) -> None:
    config = _load_config(args)
    report = run_benchmark(config, jobs=max(1, args.jobs))
    out = _out_dir(args, config)
    written: list[Path] = []

    report_path = out / "report.json"
    _atomic_write_text(report_path, json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")
    written.append(report_path)

    metrics_path = out / "metrics.csv"
    _atomic_write_text(metrics_path, metrics_csv_text(report))
    written.append(metrics_path)

    for rep in report.details:
        rep_dir = out / f"rep_{rep.index:03d}"
        rep_dir.mkdir(parents=True, exist_ok=True)
        test_path = rep_dir / "test.csv"
        _atomic_write_with(test_path, lambda p, d=rep.test: write_dataset_csv(d, p))
        written.append(test_path)
        for result in rep.methods:
            pred_path = rep_dir / f"pred_{result.method}.csv"
            _atomic_write_text(
                pred_path, _predictions_csv(rep.test.X, result.predictions, result.variances)
            )
            written.append(pred_path)
    _write_manifest(out, written)

    for label, ttest in (("mae", report.ttest_mae), ("mse", report.ttest_mse)):
        if ttest is None:
            print(f"{label} t-test (gp-linear vs cart): not applicable (fewer than 2 replications)")
        else:
            verdict = "reject" if ttest.reject_at_alpha else "no rejection"
            print(
                f"{label} t-test (gp-linear vs cart): t={ttest.statistic:.6g} "
                f"dof={ttest.dof} p={ttest.p_value:.6g} -> {verdict} at alpha={ttest.alpha:g}"
            )


def _predictions_csv(X: np.ndarray, means: np.ndarray, variances: np.ndarray | None) -> str:
    dim = X.shape[1]
    lines = [",".join(f"x_{d + 1}" for d in range(dim)) + ",mean,variance"]
    for i in range(X.shape[0]):
        features = ",".join(_fmt(v) for v in X[i])
        variance = variances[i] if variances is not None else math.nan
        lines.append(f"{features},{_fmt(means[i])},{_fmt(variance)}")
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    sys.exit(main())
