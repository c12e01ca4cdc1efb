"""Experiment configuration: a sectioned key=value file parsed into dataclasses.

Sections and keys (defaults in parentheses; * marks required keys):

    [experiment]  replications (1), alpha (0.05), master_seed (0),
                  output_dir (out), split (temporal | random)
    [simulator]   *num_classes, *arrival_prob, *window, *num_train,
                  *num_test, *lognormal_mu, *lognormal_sigma,
                  *execution_rates, horizon (0),
                  feature_mode (window_mean | instantaneous),
                  queue_measure (total_size | count)
    [gp]          noise_variance (0.1), learn_noise (true),
                  max_iterations (200), tolerance (1e-7), restarts (3)
    [kernels]     names (linear, se, composite)
    [cart]        min_leaf (5), max_depth (30), min_impurity_decrease (0)

List values are comma-separated.  Parse and validation problems raise
ConfigError carrying the file path and the offending line number.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .cart import CartParams
from .errors import ConfigError
from .kernels import KernelConfig, default_kernel
from .simulator import SimulationConfig

SPLIT_POLICIES = ("temporal", "random")


@dataclass(frozen=True)
class GpOptions:
    """Initial noise level plus the optimizer settings used for every kernel."""

    noise_variance: float = 0.1
    learn_noise: bool = True
    max_iterations: int = 200
    tolerance: float = 1e-7
    restarts: int = 3

    def __post_init__(self):
        if not self.noise_variance > 0:
            raise ValueError(f"noise_variance must be > 0, got {self.noise_variance}")
        if self.max_iterations < 0:
            raise ValueError(f"max_iterations must be >= 0, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.restarts < 0:
            raise ValueError(f"restarts must be >= 0, got {self.restarts}")


@dataclass(frozen=True)
class ExperimentConfig:
    simulator: SimulationConfig
    kernels: tuple[KernelConfig, ...]
    gp: GpOptions = GpOptions()
    cart: CartParams = CartParams()
    replications: int = 1
    alpha: float = 0.05
    output_dir: str = "out"
    master_seed: int = 0
    split_policy: str = "temporal"

    def __post_init__(self):
        object.__setattr__(self, "kernels", tuple(self.kernels))
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.split_policy not in SPLIT_POLICIES:
            raise ValueError(
                f"split must be one of {SPLIT_POLICIES}, got {self.split_policy!r}"
            )
        names = [k.variant.value for k in self.kernels]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate kernel names in {names}")


class _FileView:
    """A parsed config file with (section, key) -> line-number lookups."""

    def __init__(self, path: Path):
        self.path = path
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", path=str(path)) from exc
        self.lines = _scan_lines(text)
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            raise ConfigError(str(exc.message), path=str(path), line=line) from exc
        self.parser = parser

    def line_of(self, section: str, key: str | None = None) -> int | None:
        return self.lines.get((section.lower(), key.lower() if key else None))

    def fail(self, message: str, section: str, key: str | None = None):
        raise ConfigError(message, path=str(self.path), line=self.line_of(section, key))

    def get(self, section: str, key: str, default=None, required: bool = False) -> str:
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        if required:
            line = self.line_of(section) or None
            raise ConfigError(
                f"missing required field {key!r} in section [{section}]",
                path=str(self.path),
                line=line,
            )
        return default

    def get_typed(self, section: str, key: str, convert, default=None, required=False):
        raw = self.get(section, key, required=required)
        if raw is None:
            return default
        try:
            return convert(raw)
        except (TypeError, ValueError) as exc:
            self.fail(f"bad value for {key!r}: {exc}", section, key)


def _scan_lines(text: str) -> dict:
    lines: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            lines[(section, None)] = lineno
            continue
        if section is not None and ("=" in stripped or ":" in stripped):
            key = stripped.replace(":", "=").split("=", 1)[0].strip().lower()
            lines.setdefault((section, key), lineno)
    return lines


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_float_list(raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(float(p) for p in parts)


def _parse_name_list(raw: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in raw.split(",") if p.strip())
    if not parts:
        raise ValueError("expected a comma-separated list of names")
    return parts


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config file not found", path=str(path))
    view = _FileView(path)
    sim = _load_simulator(view)
    gp = _build(view, "gp", GpOptions, dict(
        noise_variance=view.get_typed("gp", "noise_variance", float, 0.1),
        learn_noise=view.get_typed("gp", "learn_noise", _parse_bool, True),
        max_iterations=view.get_typed("gp", "max_iterations", int, 200),
        tolerance=view.get_typed("gp", "tolerance", float, 1e-7),
        restarts=view.get_typed("gp", "restarts", int, 3),
    ))
    cart = _build(view, "cart", CartParams, dict(
        min_leaf=view.get_typed("cart", "min_leaf", int, 5),
        max_depth=view.get_typed("cart", "max_depth", int, 30),
        min_impurity_decrease=view.get_typed("cart", "min_impurity_decrease", float, 0.0),
    ))
    names = view.get_typed("kernels", "names", _parse_name_list, ("linear", "se", "composite"))
    kernels = []
    for name in names:
        try:
            kernels.append(default_kernel(name, sim.num_classes))
        except ValueError:
            view.fail(
                f"unknown kernel {name!r}; choose from linear, se, composite",
                "kernels",
                "names",
            )
    exp_kwargs = dict(
        simulator=sim,
        kernels=tuple(kernels),
        gp=gp,
        cart=cart,
        replications=view.get_typed("experiment", "replications", int, 1),
        alpha=view.get_typed("experiment", "alpha", float, 0.05),
        output_dir=view.get("experiment", "output_dir", "out"),
        master_seed=view.get_typed("experiment", "master_seed", int, 0),
        split_policy=view.get("experiment", "split", "temporal"),
    )
    try:
        return ExperimentConfig(**exp_kwargs)
    except ValueError as exc:
        view.fail(str(exc), "experiment")


def _load_simulator(view: _FileView) -> SimulationConfig:
    section = "simulator"
    if not view.parser.has_section(section):
        raise ConfigError(
            "missing required section [simulator]", path=str(view.path)
        )
    mu = view.get_typed(section, "lognormal_mu", _parse_float_list, required=True)
    sigma = view.get_typed(section, "lognormal_sigma", _parse_float_list, required=True)
    if len(mu) != len(sigma):
        view.fail(
            f"lognormal_mu has {len(mu)} entries but lognormal_sigma has {len(sigma)}",
            section,
            "lognormal_sigma",
        )
    kwargs = dict(
        num_classes=view.get_typed(section, "num_classes", int, required=True),
        arrival_prob=view.get_typed(section, "arrival_prob", float, required=True),
        lognormal_params=tuple(zip(mu, sigma)),
        execution_rates=view.get_typed(
            section, "execution_rates", _parse_float_list, required=True
        ),
        window=view.get_typed(section, "window", int, required=True),
        num_train=view.get_typed(section, "num_train", int, required=True),
        num_test=view.get_typed(section, "num_test", int, required=True),
        horizon=view.get_typed(section, "horizon", int, 0),
        seed=view.get_typed(section, "seed", int, 0),
        feature_mode=view.get(section, "feature_mode", "window_mean"),
        queue_measure=view.get(section, "queue_measure", "total_size"),
    )
    return _build(view, section, SimulationConfig, kwargs)


def _build(view: _FileView, section: str, cls, kwargs: dict):
    try:
        return cls(**kwargs)
    except ValueError as exc:
        view.fail(str(exc), section)
