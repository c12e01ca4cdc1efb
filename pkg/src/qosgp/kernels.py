"""Covariance functions over nonnegative feature vectors.

Three kernels are supported, each parameterized in log-space so that
unconstrained optimization keeps every hyperparameter strictly positive:

    linear      k(x, x') = sum_d x_d x'_d / a_d^2
    se          k(x, x') = s^2 * exp(-0.5 * sum_d (x_d - x'_d)^2 / a_d^2)
    composite   k_se(x, x') + k_lin(x, x') + b

where the a_d are per-dimension length-scales (a diagonal scaling matrix),
s is the signal amplitude of the squared-exponential term, and b is a
constant bias.  Hyperparameter gradients are returned with respect to the
log-space coordinates, i.e. already multiplied through the chain rule
d theta / d log theta = theta.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np


class KernelVariant(str, enum.Enum):
    LINEAR = "linear"
    SQUARED_EXPONENTIAL = "se"
    COMPOSITE = "composite"


def n_params(variant: KernelVariant, input_dim: int) -> int:
    """Number of log-space hyperparameters carried by a kernel variant."""
    if variant is KernelVariant.LINEAR:
        return input_dim
    if variant is KernelVariant.SQUARED_EXPONENTIAL:
        return input_dim + 1
    return 2 * input_dim + 2


@dataclass(frozen=True)
class KernelConfig:
    """A kernel variant plus its hyperparameter vector in log-space.

    Parameter layout of ``log_params``:

    * linear: D log length-scales.
    * se: D log length-scales, then log signal amplitude (so the kernel's
      self-similarity is ``exp(log_params[-1])**2``).
    * composite: the se parameters, then the linear parameters, then the
      log bias.
    """

    variant: KernelVariant
    log_params: tuple[float, ...]
    input_dim: int

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        variant = KernelVariant(self.variant)
        object.__setattr__(self, "variant", variant)
        params = tuple(float(v) for v in self.log_params)
        object.__setattr__(self, "log_params", params)
        expected = n_params(variant, self.input_dim)
        if len(params) != expected:
            raise ValueError(
                f"{variant.value} kernel with input_dim={self.input_dim} takes "
                f"{expected} log-params, got {len(params)}"
            )
        decoded = np.exp(np.asarray(params))
        if not np.all(np.isfinite(decoded)) or np.any(decoded <= 0):
            raise ValueError("decoded hyperparameters exp(log_params) must be finite and > 0")

    def with_log_params(self, log_params) -> "KernelConfig":
        return replace(self, log_params=tuple(float(v) for v in log_params))


def default_kernel(variant: KernelVariant | str, input_dim: int) -> KernelConfig:
    """Kernel with all log-params zero (every decoded hyperparameter = 1)."""
    variant = KernelVariant(variant)
    return KernelConfig(variant, (0.0,) * n_params(variant, input_dim), input_dim)


def param_names(variant: KernelVariant | str, input_dim: int) -> tuple[str, ...]:
    """Human-readable names for the decoded parameters, in log_params order."""
    variant = KernelVariant(variant)
    scales = tuple(f"a_{d + 1}" for d in range(input_dim))
    if variant is KernelVariant.LINEAR:
        return scales
    if variant is KernelVariant.SQUARED_EXPONENTIAL:
        return scales + ("sigma_f",)
    se_scales = tuple(f"se_{name}" for name in scales)
    lin_scales = tuple(f"lin_{name}" for name in scales)
    return se_scales + ("sigma_f",) + lin_scales + ("bias",)


def kernel_to_dict(kernel: KernelConfig) -> dict:
    return {
        "variant": kernel.variant.value,
        "log_params": list(kernel.log_params),
        "input_dim": kernel.input_dim,
    }


def kernel_from_dict(obj: dict) -> KernelConfig:
    return KernelConfig(
        KernelVariant(obj["variant"]),
        tuple(obj["log_params"]),
        int(obj["input_dim"]),
    )


def _split_params(kernel: KernelConfig) -> dict[str, np.ndarray | float]:
    """Decode log-params into named positive hyperparameters."""
    theta = np.exp(np.asarray(kernel.log_params, dtype=float))
    d = kernel.input_dim
    if kernel.variant is KernelVariant.LINEAR:
        return {"lin_scales": theta}
    if kernel.variant is KernelVariant.SQUARED_EXPONENTIAL:
        return {"se_scales": theta[:d], "amplitude": theta[d]}
    return {
        "se_scales": theta[:d],
        "amplitude": theta[d],
        "lin_scales": theta[d + 1 : 2 * d + 1],
        "bias": theta[2 * d + 1],
    }


class KernelWorkspace:
    """Cached pairwise statistics of a fixed point set.

    Building the per-dimension squared-difference and product stacks once
    makes repeated gram/gradient evaluation at different hyperparameters
    cheap, which is what the marginal-likelihood optimizer needs.  All
    public kernel functions route through this class so there is a single
    numerical code path.
    """

    def __init__(self, variant: KernelVariant, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("X must be a nonempty 2-D array of shape (N, D)")
        self.variant = variant
        self.X = X
        self.n, self.dim = X.shape
        self._se_cache: tuple | None = None
        cols = X.T[:, :, None]  # (D, N, 1)
        if variant is not KernelVariant.LINEAR:
            diff = cols - X.T[:, None, :]
            self._sqdiff = diff * diff  # (D, N, N)
        if variant is not KernelVariant.SQUARED_EXPONENTIAL:
            self._outer = cols * X.T[:, None, :]  # (D, N, N)

    def gram(self, log_params) -> np.ndarray:
        """N x N covariance matrix at the given log-space hyperparameters."""
        kernel = KernelConfig(self.variant, tuple(log_params), self.dim)
        p = _split_params(kernel)
        if "lin_scales" in p:
            k = np.tensordot(p["lin_scales"] ** -2.0, self._outer, axes=(0, 0))
            if "se_scales" in p:
                k += self._se_part(tuple(kernel.log_params), p)
            if "bias" in p:
                k += p["bias"]
        else:
            k = self._se_part(tuple(kernel.log_params), p)
        # Averaging with the transpose keeps the result exactly symmetric
        # and leaves it fresh, so callers may mutate it freely.
        out = k + k.T
        out *= 0.5
        return out

    def _se_part(self, log_params: tuple, p: dict) -> np.ndarray:
        """Squared-exponential term, memoized for the most recent parameters.

        The marginal-likelihood optimizer evaluates the gram and then the
        gradient at the same accepted point, so a one-entry cache halves
        the exp() work per iteration.
        """
        if self._se_cache is not None and self._se_cache[0] == log_params:
            return self._se_cache[1]
        r2 = np.tensordot(p["se_scales"] ** -2.0, self._sqdiff, axes=(0, 0))
        k_se = p["amplitude"] ** 2 * np.exp(-0.5 * r2)
        self._se_cache = (log_params, k_se)
        return k_se

    def gram_gradients(self, log_params) -> list[np.ndarray]:
        """One N x N matrix d K / d log_params[i] per hyperparameter."""
        kernel = KernelConfig(self.variant, tuple(log_params), self.dim)
        p = _split_params(kernel)
        grads: list[np.ndarray] = []
        if "se_scales" in p:
            inv_sq = p["se_scales"] ** -2.0
            k_se = self._se_part(tuple(kernel.log_params), p)
            for d in range(self.dim):
                grads.append(k_se * (self._sqdiff[d] * inv_sq[d]))
            grads.append(2.0 * k_se)
        if "lin_scales" in p:
            inv_sq = p["lin_scales"] ** -2.0
            for d in range(self.dim):
                grads.append(-2.0 * inv_sq[d] * self._outer[d])
        if "bias" in p:
            grads.append(np.full((self.n, self.n), p["bias"]))
        return grads

    def gram_gradient_dots(self, log_params, weights: np.ndarray) -> np.ndarray:
        """sum_{nm} weights[n,m] * dK[n,m]/dtheta_p, one value per parameter.

        Contracting each parameter's gradient matrix against a fixed weight
        matrix without materializing the matrices; this is the inner loop
        of the marginal-likelihood gradient.
        """
        kernel = KernelConfig(self.variant, tuple(log_params), self.dim)
        p = _split_params(kernel)
        dots: list[float] = []
        if "se_scales" in p:
            inv_sq = p["se_scales"] ** -2.0
            weighted = weights * self._se_part(tuple(kernel.log_params), p)
            dots.extend(inv_sq * np.einsum("ij,dij->d", weighted, self._sqdiff))
            dots.append(2.0 * float(weighted.sum()))
        if "lin_scales" in p:
            inv_sq = p["lin_scales"] ** -2.0
            dots.extend(-2.0 * inv_sq * np.einsum("ij,dij->d", weights, self._outer))
        if "bias" in p:
            dots.append(p["bias"] * float(weights.sum()))
        return np.asarray(dots, dtype=float)


def gram(kernel: KernelConfig, X) -> np.ndarray:
    """Pairwise covariance matrix K with K[n, m] = k(X[n], X[m])."""
    X = _check_points(kernel, X)
    return KernelWorkspace(kernel.variant, X).gram(kernel.log_params)


def grad_theta(kernel: KernelConfig, X) -> list[np.ndarray]:
    """Gradient of the gram matrix with respect to each log-space parameter."""
    X = _check_points(kernel, X)
    return KernelWorkspace(kernel.variant, X).gram_gradients(kernel.log_params)


def cross_gram(kernel: KernelConfig, X, X2) -> np.ndarray:
    """Rectangular covariance matrix between two point sets, shape (N, M)."""
    X = _check_points(kernel, X)
    X2 = _check_points(kernel, X2)
    p = _split_params(kernel)
    k = np.zeros((X.shape[0], X2.shape[0]))
    if "se_scales" in p:
        diff = X[:, None, :] - X2[None, :, :]
        r2 = (diff * diff) @ (p["se_scales"] ** -2.0)
        k += p["amplitude"] ** 2 * np.exp(-0.5 * r2)
    if "lin_scales" in p:
        k += (X * p["lin_scales"] ** -2.0) @ X2.T
    if "bias" in p:
        k += p["bias"]
    return k


def kernel_eval(kernel: KernelConfig, x, x2) -> float:
    """Covariance between two single points, k(x, x')."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != (kernel.input_dim,) or x2.shape != (kernel.input_dim,):
        raise ValueError(
            f"point dimensions {x.shape[-1]} and {x2.shape[-1]} must both equal "
            f"kernel input_dim {kernel.input_dim}"
        )
    return float(cross_gram(kernel, x[None, :], x2[None, :])[0, 0])


def _check_points(kernel: KernelConfig, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("point set must be a nonempty 2-D array of shape (N, D)")
    if X.shape[1] != kernel.input_dim:
        raise ValueError(
            f"point set has dimension {X.shape[1]}, kernel expects {kernel.input_dim}"
        )
    return X
