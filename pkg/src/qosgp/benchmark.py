"""Replication-level benchmark: GP kernels against the CART baseline.

Each replication simulates a fresh trace on its own random substream,
splits the extracted dataset into train/test, fits one GP per configured
kernel (type-2 maximum likelihood) plus a CART tree, and scores MAE/MSE
of the predictive means on the test targets.  Replications are pure
functions of (config, index), so they may run in parallel worker
processes without changing any result.  The aggregated report carries
per-method metric vectors, box-plot summaries, and pooled-variance
t-tests of GP-linear against CART.
"""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .cart import cart_fit, cart_predict_batch
from .config import ExperimentConfig
from .data import Dataset, split_train_test
from .gp import OptimizerOptions, fit, log_marginal_likelihood, optimize_hyperparameters, predict_batch
from .kernels import KernelVariant
from .seeds import STREAM_OPT, STREAM_SIM, STREAM_SPLIT, substream_seed
from .simulator import extract_dataset
from .simulator import run as run_simulation
from .stats import (
    BoxStats,
    TTestResult,
    box_stats_to_dict,
    mae,
    mse,
    summary_stats,
    t_test_two_sample,
)

CART_METHOD = "cart"
GP_LINEAR = "gp-linear"


def method_name(variant: KernelVariant) -> str:
    return f"gp-{variant.value}"


@dataclass(frozen=True)
class MethodResult:
    method: str
    predictions: np.ndarray
    variances: np.ndarray | None  # None for CART
    mae: float
    mse: float
    lml: float | None = None  # GP only
    noise_variance: float | None = None  # GP only


@dataclass(frozen=True)
class ReplicationResult:
    index: int
    train_size: int
    test: Dataset
    methods: tuple[MethodResult, ...]


def run_replication(config: ExperimentConfig, index: int) -> ReplicationResult:
    try:
        return _run_replication(config, index)
    except Exception as exc:
        raise _annotate(exc, index) from exc


def _annotate(exc: Exception, index: int) -> Exception:
    try:
        return type(exc)(f"replication {index}: {exc}")
    except TypeError:
        return RuntimeError(f"replication {index}: {exc}")


def _run_replication(config: ExperimentConfig, index: int) -> ReplicationResult:
    master = config.master_seed
    sim_cfg = replace(config.simulator, seed=substream_seed(master, STREAM_SIM, index))
    trace = run_simulation(sim_cfg)
    dataset = extract_dataset(trace, sim_cfg.window)
    train, test = split_train_test(
        dataset,
        sim_cfg.num_train,
        sim_cfg.num_test,
        policy=config.split_policy,
        seed=substream_seed(master, STREAM_SPLIT, index),
    )
    results = []
    for k_index, kernel in enumerate(config.kernels):
        options = OptimizerOptions(
            max_iterations=config.gp.max_iterations,
            tolerance=config.gp.tolerance,
            restarts=config.gp.restarts,
            learn_noise=config.gp.learn_noise,
            seed=substream_seed(master, STREAM_OPT, index, k_index),
        )
        optimized, noise, lml = optimize_hyperparameters(
            train, kernel, config.gp.noise_variance, options
        )
        model = fit(train, optimized, noise)
        means, variances = predict_batch(model, test.X)
        results.append(
            MethodResult(
                method=method_name(kernel.variant),
                predictions=means,
                variances=variances,
                mae=mae(means, test.y),
                mse=mse(means, test.y),
                lml=log_marginal_likelihood(model),
                noise_variance=noise,
            )
        )
    tree = cart_fit(train, config.cart)
    predictions = cart_predict_batch(tree, test.X)
    results.append(
        MethodResult(
            method=CART_METHOD,
            predictions=predictions,
            variances=None,
            mae=mae(predictions, test.y),
            mse=mse(predictions, test.y),
        )
    )
    return ReplicationResult(index, len(train), test, tuple(results))


@dataclass(frozen=True)
class MetricsReport:
    methods: tuple[str, ...]
    alpha: float
    mae_values: dict  # method -> tuple of per-replication values
    mse_values: dict
    mae_box: dict  # method -> BoxStats
    mse_box: dict
    ttest_mae: TTestResult | None  # GP-linear vs CART; None when R < 2
    ttest_mse: TTestResult | None
    details: tuple[ReplicationResult, ...]

    @property
    def replications(self) -> int:
        return len(self.details)


def run_benchmark(config: ExperimentConfig, jobs: int = 1) -> MetricsReport:
    """Run all replications (optionally in parallel) and aggregate in index order."""
    count = config.replications
    if jobs > 1 and count > 1:
        context = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(
            max_workers=min(jobs, count), mp_context=context
        ) as pool:
            details = list(pool.map(run_replication, [config] * count, range(count)))
    else:
        details = [run_replication(config, r) for r in range(count)]
    return aggregate(config, tuple(details))


def aggregate(config: ExperimentConfig, details: tuple[ReplicationResult, ...]) -> MetricsReport:
    methods = tuple(method_name(k.variant) for k in config.kernels) + (CART_METHOD,)
    mae_values = {m: [] for m in methods}
    mse_values = {m: [] for m in methods}
    for rep in details:
        for result in rep.methods:
            mae_values[result.method].append(result.mae)
            mse_values[result.method].append(result.mse)
    mae_values = {m: tuple(v) for m, v in mae_values.items()}
    mse_values = {m: tuple(v) for m, v in mse_values.items()}
    mae_box = {m: summary_stats(v) for m, v in mae_values.items()}
    mse_box = {m: summary_stats(v) for m, v in mse_values.items()}
    ttest_mae = ttest_mse = None
    if len(details) >= 2 and GP_LINEAR in mae_values:
        ttest_mae = t_test_two_sample(
            mae_values[GP_LINEAR], mae_values[CART_METHOD], config.alpha
        )
        ttest_mse = t_test_two_sample(
            mse_values[GP_LINEAR], mse_values[CART_METHOD], config.alpha
        )
    return MetricsReport(
        methods=methods,
        alpha=config.alpha,
        mae_values=mae_values,
        mse_values=mse_values,
        mae_box=mae_box,
        mse_box=mse_box,
        ttest_mae=ttest_mae,
        ttest_mse=ttest_mse,
        details=details,
    )


def ttest_to_dict(result: TTestResult | None) -> dict | None:
    if result is None:
        return None
    return {
        "statistic": result.statistic,
        "dof": result.dof,
        "p_value": result.p_value,
        "alpha": result.alpha,
        "reject_at_alpha": result.reject_at_alpha,
        "degenerate": result.degenerate,
    }


def report_to_dict(report: MetricsReport) -> dict:
    gp_summaries = {}
    for method in report.methods:
        if method == CART_METHOD:
            continue
        gp_summaries[method] = {
            "lml": [_method(rep, method).lml for rep in report.details],
            "noise_variance": [
                _method(rep, method).noise_variance for rep in report.details
            ],
        }
    return {
        "replications": report.replications,
        "alpha": report.alpha,
        "methods": list(report.methods),
        "metrics": {
            method: {
                "mae": list(report.mae_values[method]),
                "mse": list(report.mse_values[method]),
            }
            for method in report.methods
        },
        "box_stats": {
            "mae": {m: box_stats_to_dict(b) for m, b in report.mae_box.items()},
            "mse": {m: box_stats_to_dict(b) for m, b in report.mse_box.items()},
        },
        "t_tests": {
            "mae_gp_linear_vs_cart": ttest_to_dict(report.ttest_mae),
            "mse_gp_linear_vs_cart": ttest_to_dict(report.ttest_mse),
        },
        "gp": gp_summaries,
    }


def _method(rep: ReplicationResult, name: str) -> MethodResult:
    for result in rep.methods:
        if result.method == name:
            return result
    raise KeyError(name)


def metrics_csv_text(report: MetricsReport) -> str:
    from .data import _fmt

    lines = ["replication,method,mae,mse"]
    for rep in report.details:
        for method in report.methods:
            result = _method(rep, method)
            lines.append(
                f"{rep.index},{method},{_fmt(result.mae)},{_fmt(result.mse)}"
            )
    return "\n".join(lines) + "\n"
