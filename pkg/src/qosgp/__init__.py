"""QoS latency prediction for a simulated web-service execution system.

The package simulates a multi-class queueing system, extracts
queue-size/latency regression datasets from its traces, fits Gaussian
process models with learned kernel hyperparameters, and benchmarks them
against a CART regression-tree baseline.
"""

from .cart import CartParams, RegressionTree, cart_fit, cart_predict
from .data import Dataset, read_dataset_csv, split_train_test, write_dataset_csv
from .errors import ConfigError, NumericalError, SimulationLimitError
from .gp import (
    OptimizerOptions,
    Prediction,
    TrainedModel,
    fit,
    lml_gradient,
    load_model,
    log_marginal_likelihood,
    optimize_hyperparameters,
    predict,
    predict_batch,
    sample_prior,
    save_model,
)
from .kernels import KernelConfig, KernelVariant, default_kernel, gram, grad_theta, kernel_eval
from .simulator import Simulation, SimulationConfig, SimulationTrace, extract_dataset, run
from .stats import BoxStats, TTestResult, mae, mse, summary_stats, t_test_two_sample

__version__ = "1.0.0"

__all__ = [
    "CartParams",
    "ConfigError",
    "Dataset",
    "KernelConfig",
    "KernelVariant",
    "NumericalError",
    "OptimizerOptions",
    "Prediction",
    "RegressionTree",
    "Simulation",
    "SimulationConfig",
    "SimulationLimitError",
    "SimulationTrace",
    "TrainedModel",
    "TTestResult",
    "BoxStats",
    "cart_fit",
    "cart_predict",
    "default_kernel",
    "extract_dataset",
    "fit",
    "grad_theta",
    "gram",
    "kernel_eval",
    "lml_gradient",
    "load_model",
    "log_marginal_likelihood",
    "mae",
    "mse",
    "optimize_hyperparameters",
    "predict",
    "predict_batch",
    "read_dataset_csv",
    "run",
    "sample_prior",
    "save_model",
    "split_train_test",
    "summary_stats",
    "t_test_two_sample",
    "write_dataset_csv",
]
