"""Gaussian process regression with a zero-mean prior.

The model places a GP prior over the latent function and a Gaussian noise
term with variance ``noise_variance`` on the observations, so the training
targets are jointly Gaussian with covariance

    C = K + noise_variance * I,

where K is the kernel gram matrix.  Fitting factorizes C once (Cholesky,
with an escalating diagonal jitter fallback); prediction and the log
marginal likelihood reuse the factor through triangular solves:

    mean(x)     = k(x)^T C^{-1} y
    variance(x) = k(x, x) + noise_variance - k(x)^T C^{-1} k(x)
    log p(y)    = -1/2 log|C| - 1/2 y^T C^{-1} y - N/2 log(2 pi)

Hyperparameters (kernel log-params, optionally the log noise variance) are
learned by maximizing the log marginal likelihood with gradient ascent and
a backtracking (Armijo) line search, optionally from several perturbed
restarts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotrf, dpotri

from .data import Dataset
from .errors import NumericalError
from .kernels import (
    KernelConfig,
    KernelWorkspace,
    _split_params,
    cross_gram,
    gram,
    kernel_from_dict,
    kernel_to_dict,
)

LOG_2PI = math.log(2.0 * math.pi)

# Jitter policy: start at 1e-10 * mean(diag C), escalate tenfold up to
# 1e-4 * mean(diag C), then give up.
_JITTER_START = 1e-10
_JITTER_LIMIT = 1e-4

# Round-off sized negative predictive variances clamp to zero; anything
# more negative indicates a broken factorization.
_VARIANCE_FLOOR = -1e-8

_ARMIJO_C = 1e-4
_MIN_STEP = 1e-12
_MAX_LOG_PARAM = 300.0  # keeps exp(theta) and its square finite; candidates beyond are rejected
_MAX_FIRST_MOVE = 2.0  # cap on the largest log-space coordinate move of the first trial


@dataclass(frozen=True)
class Prediction:
    mean: float
    variance: float


@dataclass(frozen=True)
class TrainedModel:
    """Immutable result of ``fit``: dataset, kernel, and the factorized C."""

    dataset: Dataset
    kernel: KernelConfig
    noise_variance: float
    chol_factor: np.ndarray  # lower triangular L with L L^T = C + jitter I
    alpha: np.ndarray  # C^{-1} y


@dataclass(frozen=True)
class OptimizerOptions:
    """Settings for type-2 maximum likelihood.

    ``restarts`` counts additional perturbed starting points beyond the
    supplied one; each perturbs every optimized log-coordinate by a
    uniform draw from [-1, 1].  ``seed`` fixes those draws.
    """

    max_iterations: int = 200
    tolerance: float = 1e-7
    restarts: int = 3
    learn_noise: bool = True
    seed: int = 0


def _cholesky_with_jitter(C: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of C + jitter*I; jitter stays zero unless needed."""
    if not np.all(np.isfinite(C)):
        raise NumericalError("covariance matrix has non-finite entries")
    L, info = dpotrf(C, lower=1, clean=1)
    if info == 0:
        return L, 0.0
    if info < 0:
        raise NumericalError(f"Cholesky factorization failed with info={info}")
    n = C.shape[0]
    base = float(np.trace(C)) / n
    if not np.isfinite(base) or base <= 0.0:
        base = 1.0
    jitter = _JITTER_START * base
    limit = _JITTER_LIMIT * base
    diag = slice(0, n * n, n + 1)
    work = C.copy()
    work.flat[diag] += jitter
    while True:
        L, info = dpotrf(work, lower=1, clean=1)
        if info == 0:
            return L, jitter
        if info < 0 or jitter >= limit:
            raise NumericalError(
                f"Cholesky factorization failed with jitter up to {jitter:.3e}"
            )
        bumped = min(jitter * 10.0, limit)
        work.flat[diag] += bumped - jitter
        jitter = bumped


def _inverse_from_chol(L: np.ndarray) -> np.ndarray:
    """Full symmetric inverse of C from its lower Cholesky factor (LAPACK dpotri)."""
    inv, info = dpotri(L, lower=1)
    if info != 0:
        raise NumericalError(f"dpotri failed with info={info}")
    lower = np.tril(inv, -1)
    inv += lower.T
    return inv


def fit(dataset: Dataset, kernel: KernelConfig, noise_variance: float) -> TrainedModel:
    """Factorize C = K + noise_variance*I and precompute alpha = C^{-1} y."""
    _check_noise(noise_variance)
    if dataset.dim != kernel.input_dim:
        raise ValueError(
            f"dataset dimension {dataset.dim} does not match kernel input_dim "
            f"{kernel.input_dim}"
        )
    ws = KernelWorkspace(kernel.variant, dataset.X)
    return _fit_from_workspace(ws, dataset, kernel, noise_variance)


def _fit_from_workspace(
    ws: KernelWorkspace, dataset: Dataset, kernel: KernelConfig, noise_variance: float
) -> TrainedModel:
    C = ws.gram(kernel.log_params)  # fresh array, safe to mutate
    n = len(dataset)
    C.flat[0 : n * n : n + 1] += noise_variance
    L, _ = _cholesky_with_jitter(C)
    alpha = cho_solve((L, True), dataset.y, check_finite=False)
    return TrainedModel(dataset, kernel, float(noise_variance), L, alpha)


def predict(model: TrainedModel, x_new) -> Prediction:
    """Predictive mean and variance at a single input."""
    x_new = np.atleast_1d(np.asarray(x_new, dtype=float))
    means, variances = predict_batch(model, x_new[None, :])
    return Prediction(float(means[0]), float(variances[0]))


def predict_batch(model: TrainedModel, X_new) -> tuple[np.ndarray, np.ndarray]:
    """Predictive means and variances at many inputs, via triangular solves."""
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim != 2 or X_new.shape[1] != model.kernel.input_dim:
        raise ValueError(
            f"inputs must have shape (M, {model.kernel.input_dim}), got {X_new.shape}"
        )
    if X_new.shape[0] == 0:
        return np.empty(0), np.empty(0)
    kx = cross_gram(model.kernel, model.dataset.X, X_new)  # (N, M)
    means = kx.T @ model.alpha
    v = solve_triangular(model.chol_factor, kx, lower=True, check_finite=False)
    self_cov = _self_similarity(model.kernel, X_new)
    variances = self_cov + model.noise_variance - np.einsum("ij,ij->j", v, v)
    bad = variances < _VARIANCE_FLOOR
    if np.any(bad):
        raise NumericalError(
            f"predictive variance {variances[bad].min():.3e} below round-off tolerance"
        )
    variances = np.maximum(variances, 0.0)
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(variances))):
        raise NumericalError("non-finite prediction")
    return means, variances


def _self_similarity(kernel: KernelConfig, X: np.ndarray) -> np.ndarray:
    """k(x, x) for each row of X, vectorized."""
    p = _split_params(kernel)
    out = np.zeros(X.shape[0])
    if "amplitude" in p:
        out += p["amplitude"] ** 2
    if "lin_scales" in p:
        out += (X * X) @ (p["lin_scales"] ** -2.0)
    if "bias" in p:
        out += p["bias"]
    return out


def log_marginal_likelihood(model: TrainedModel) -> float:
    """log p(y | theta) evaluated through the stored Cholesky factor."""
    half_logdet = float(np.sum(np.log(np.diag(model.chol_factor))))
    data_fit = 0.5 * float(model.dataset.y @ model.alpha)
    return -half_logdet - data_fit - 0.5 * len(model.dataset) * LOG_2PI


def lml_gradient(model: TrainedModel, include_noise: bool = False) -> np.ndarray:
    """Gradient of the log marginal likelihood in log-parameter space.

    Entries follow the kernel's log_params order; with ``include_noise``
    a final entry for the log noise variance is appended.  Each entry is
    0.5 * Tr((alpha alpha^T - C^{-1}) dC/dtheta_i).
    """
    ws = KernelWorkspace(model.kernel.variant, model.dataset.X)
    return _gradient_from_parts(
        ws, model.kernel.log_params, model.noise_variance,
        model.chol_factor, model.alpha, include_noise,
    )


def _gradient_from_parts(
    ws: KernelWorkspace,
    log_params,
    noise_variance: float,
    L: np.ndarray,
    alpha: np.ndarray,
    include_noise: bool,
) -> np.ndarray:
    inner = np.outer(alpha, alpha)
    inner -= _inverse_from_chol(L)
    grads = list(0.5 * ws.gram_gradient_dots(log_params, inner))
    if include_noise:
        # dC/d(log noise) = noise * I
        grads.append(0.5 * noise_variance * float(np.trace(inner)))
    return np.asarray(grads)


def optimize_hyperparameters(
    dataset: Dataset,
    kernel: KernelConfig,
    noise_variance: float,
    options: OptimizerOptions = OptimizerOptions(),
    history: list | None = None,
) -> tuple[KernelConfig, float, float]:
    """Type-2 maximum likelihood over kernel (and optionally noise) parameters.

    Runs monotone gradient ascent with backtracking line search from the
    supplied point and from ``options.restarts`` perturbed copies, and
    returns ``(kernel, noise_variance, lml)`` for the best point found.
    The achieved LML is never below the LML of the starting point.  When
    ``history`` is given, one list of accepted LML values is appended per
    start.
    """
    _check_noise(noise_variance)
    if dataset.dim != kernel.input_dim:
        raise ValueError("dataset dimension does not match kernel input_dim")
    ws = KernelWorkspace(kernel.variant, dataset.X)
    n_kernel = len(kernel.log_params)

    def unpack(theta: np.ndarray) -> tuple[tuple[float, ...], float]:
        log_params = tuple(theta[:n_kernel])
        noise = math.exp(theta[n_kernel]) if options.learn_noise else noise_variance
        return log_params, noise

    def evaluate(theta: np.ndarray) -> tuple[float, TrainedModel]:
        log_params, noise = unpack(theta)
        model = _fit_from_workspace(
            ws, dataset, kernel.with_log_params(log_params), noise
        )
        return log_marginal_likelihood(model), model

    theta0 = np.asarray(kernel.log_params, dtype=float)
    if options.learn_noise:
        theta0 = np.append(theta0, math.log(noise_variance))

    try:
        lml0, model0 = evaluate(theta0)
    except NumericalError as exc:
        raise NumericalError(f"objective failed at initial theta={theta0!r}: {exc}") from exc
    if not math.isfinite(lml0):
        raise NumericalError(f"log marginal likelihood not finite at theta={theta0!r}")

    if options.max_iterations == 0:
        return kernel, noise_variance, lml0

    rng = np.random.default_rng(options.seed)
    starts = [theta0]
    for _ in range(options.restarts):
        starts.append(theta0 + rng.uniform(-1.0, 1.0, size=theta0.shape))

    best_theta, best_lml = theta0, lml0
    for idx, start in enumerate(starts):
        result = _ascend(start, evaluate, ws, options, first_start=(idx == 0))
        if result is None:
            if history is not None:
                history.append([])
            continue
        theta, lml, accepted = result
        if history is not None:
            history.append(accepted)
        if lml > best_lml:
            best_theta, best_lml = theta, lml

    best_log_params, best_noise = unpack(best_theta)
    return kernel.with_log_params(best_log_params), best_noise, best_lml


def _ascend(theta, evaluate, ws, options: OptimizerOptions, first_start: bool):
    """Gradient ascent with Armijo backtracking from one starting point.

    Returns (theta, lml, accepted_lml_sequence), or None when the start
    itself is not evaluable (only possible for perturbed restarts).
    """
    try:
        f, model = evaluate(theta)
    except NumericalError:
        if first_start:
            raise
        return None
    if not math.isfinite(f):
        if first_start:
            raise NumericalError(f"log marginal likelihood not finite at theta={theta!r}")
        return None

    accepted = [f]
    step = 1.0
    for _ in range(options.max_iterations):
        g = _gradient_from_parts(
            ws,
            tuple(theta[: len(model.kernel.log_params)]),
            model.noise_variance,
            model.chol_factor,
            model.alpha,
            options.learn_noise,
        )
        g_sq = float(g @ g)
        if g_sq == 0.0:
            break
        # Steep gradients would fling the first trial into overflow range;
        # cap its largest coordinate move, then backtrack as usual.
        t = min(1.0, step * 4.0, _MAX_FIRST_MOVE / float(np.max(np.abs(g))))
        candidate = None
        while t >= _MIN_STEP:
            trial = theta + t * g
            f_trial = -math.inf
            if np.all(np.isfinite(trial)) and np.max(np.abs(trial)) < _MAX_LOG_PARAM:
                try:
                    f_trial, m_trial = evaluate(trial)
                except NumericalError:
                    f_trial = -math.inf
            if math.isfinite(f_trial) and f_trial >= f + _ARMIJO_C * t * g_sq:
                candidate = (trial, f_trial, m_trial, t)
                break
            t *= 0.5
        if candidate is None:
            break
        theta, f_new, model, step = candidate[0], candidate[1], candidate[2], candidate[3]
        gain = f_new - f
        f = f_new
        accepted.append(f)
        if gain < options.tolerance * max(1.0, abs(f)):
            break
    return theta, f, accepted


def sample_prior(kernel: KernelConfig, X, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` joint samples from the zero-mean prior at the points X.

    Returns an array of shape (count, N); rows are independent draws from
    N(0, K + jitter I), reproducible for a fixed seed.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    K = gram(kernel, X)
    L, _ = _cholesky_with_jitter(K)
    z = np.random.default_rng(seed).standard_normal((count, K.shape[0]))
    return z @ L.T


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "kernel": kernel_to_dict(model.kernel),
        "noise_variance": model.noise_variance,
        "X": model.dataset.X.tolist(),
        "y": model.dataset.y.tolist(),
    }


def model_from_dict(obj: dict) -> TrainedModel:
    """Rebuild a model from its persisted form; the factorization is recomputed."""
    kernel = kernel_from_dict(obj["kernel"])
    dataset = Dataset(np.asarray(obj["X"], dtype=float), np.asarray(obj["y"], dtype=float))
    return fit(dataset, kernel, float(obj["noise_variance"]))


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text()))


def _check_noise(noise_variance: float) -> None:
    if not (isinstance(noise_variance, (int, float)) and math.isfinite(noise_variance)):
        raise ValueError(f"noise_variance must be a finite number, got {noise_variance!r}")
    if noise_variance <= 0:
        raise ValueError(f"noise_variance must be > 0, got {noise_variance}")
