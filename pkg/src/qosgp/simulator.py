"""Discrete-event simulation of a multi-class web-service execution system.

Demands arrive stochastically (one Bernoulli trial per discrete time unit),
are tagged with a uniformly random class, and carry a lognormal size.  Each
class has a FIFO queue.  A Round-Robin collector feeds a single
non-preemptive execution system that drains ``execution_rates[class]`` size
units per time unit.  Each tick proceeds as:

    1. arrival trial; a new demand joins its class queue
    2. the in-service demand (if any) is decremented; on reaching zero
       remaining size it completes at this tick
    3. if the server is idle, Round-Robin dispatches the head of the next
       non-empty queue in circular order after the last-served class; the
       dispatched demand receives its first decrement next tick
    4. a queue-size observation row is recorded

A demand arriving at t therefore starts executing at t+1 at the earliest,
so every latency (completion time minus arrival time) is at least 1.

From a trace, a regression dataset pairs per-class queue sizes (averaged
over a sliding window of the last T observations, or the instantaneous
values) with the mean latency of demands completing inside the window.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, _fmt
from .errors import SimulationLimitError

FEATURE_MODES = ("window_mean", "instantaneous")
QUEUE_MEASURES = ("total_size", "count")

MAX_AUTO_STEPS = 10_000_000


@dataclass(frozen=True)
class SimulationConfig:
    num_classes: int
    arrival_prob: float
    lognormal_params: tuple[tuple[float, float], ...]
    execution_rates: tuple[float, ...]
    window: int
    num_train: int
    num_test: int
    horizon: int = 0  # 0 = run until num_train + num_test samples are extractable
    seed: int = 0
    feature_mode: str = "window_mean"
    queue_measure: str = "total_size"

    def __post_init__(self):
        object.__setattr__(
            self,
            "lognormal_params",
            tuple((float(m), float(s)) for m, s in self.lognormal_params),
        )
        object.__setattr__(
            self, "execution_rates", tuple(float(r) for r in self.execution_rates)
        )
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if not 0.0 <= self.arrival_prob <= 1.0:
            raise ValueError(f"arrival_prob must be in [0, 1], got {self.arrival_prob}")
        if len(self.lognormal_params) != self.num_classes:
            raise ValueError(
                f"need {self.num_classes} lognormal parameter pairs, "
                f"got {len(self.lognormal_params)}"
            )
        if any(s < 0 for _, s in self.lognormal_params):
            raise ValueError("lognormal sigma values must be >= 0")
        if len(self.execution_rates) != self.num_classes:
            raise ValueError(
                f"need {self.num_classes} execution rates, got {len(self.execution_rates)}"
            )
        if any(r <= 0 for r in self.execution_rates):
            raise ValueError("execution rates must be > 0")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.num_train < 0 or self.num_test < 0 or self.num_train + self.num_test < 1:
            raise ValueError("num_train and num_test must be >= 0 and sum to >= 1")
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if self.feature_mode not in FEATURE_MODES:
            raise ValueError(
                f"feature_mode must be one of {FEATURE_MODES}, got {self.feature_mode!r}"
            )
        if self.queue_measure not in QUEUE_MEASURES:
            raise ValueError(
                f"queue_measure must be one of {QUEUE_MEASURES}, got {self.queue_measure!r}"
            )


@dataclass
class Demand:
    class_id: int
    size: float
    remaining: float
    arrival_time: int
    completion_time: int | None = None

    @property
    def latency(self) -> int:
        if self.completion_time is None:
            raise ValueError("demand has not completed")
        return self.completion_time - self.arrival_time


@dataclass(frozen=True)
class SimulationTrace:
    """Per-tick observations plus the completed demands, in time order."""

    config: SimulationConfig
    times: np.ndarray  # (H,) consecutive integers from 0
    queue_sizes: np.ndarray  # (H, D) per-class queue measure at each tick
    completion_counts: np.ndarray  # (H,) demands finishing at each tick
    latency_sums: np.ndarray  # (H,) summed latencies of those demands
    completed: tuple[Demand, ...]  # completion order
    arrivals: int  # total demands generated
    rng_digest: str  # hash of the final RNG state, for determinism checks

    def __len__(self) -> int:
        return len(self.times)


def generate_arrivals(rng: np.random.Generator, config: SimulationConfig, t: int = 0):
    """At most one demand per time unit: arrival with probability arrival_prob.

    The uniform trial is always consumed so the draw sequence is identical
    whether or not an arrival occurs.  Class is uniform over the classes;
    size is exp of a normal draw with that class's (mu, sigma).
    """
    if rng.random() >= config.arrival_prob:
        return None
    class_id = int(rng.integers(config.num_classes))
    mu, sigma = config.lognormal_params[class_id]
    size = float(np.exp(rng.normal(mu, sigma)))
    return Demand(class_id=class_id, size=size, remaining=size, arrival_time=t)


@dataclass
class Simulation:
    """Mutable simulation state; step() advances one universal time unit."""

    config: SimulationConfig
    rng: np.random.Generator = field(init=False)
    t: int = field(init=False, default=-1)
    queues: list = field(init=False)
    in_service: Demand | None = field(init=False, default=None)
    last_served: int = field(init=False)
    completed: list = field(init=False)
    arrivals: int = field(init=False, default=0)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.config.seed)
        self.queues = [deque() for _ in range(self.config.num_classes)]
        self.last_served = self.config.num_classes - 1  # scan starts at class 0
        self.completed = []
        self._queue_rows: list = []
        self._counts: list = []
        self._latency_sums: list = []

    def step(self) -> list[Demand]:
        """Advance one tick; returns the demands that completed at it."""
        self.t += 1
        demand = generate_arrivals(self.rng, self.config, self.t)
        if demand is not None:
            self.queues[demand.class_id].append(demand)
            self.arrivals += 1

        finished: list[Demand] = []
        if self.in_service is not None:
            served = self.in_service
            served.remaining -= self.config.execution_rates[served.class_id]
            if served.remaining <= 0.0:
                served.remaining = 0.0
                served.completion_time = self.t
                finished.append(served)
                self.completed.append(served)
                self.in_service = None

        if self.in_service is None:
            d = self.config.num_classes
            for offset in range(1, d + 1):
                candidate = (self.last_served + offset) % d
                if self.queues[candidate]:
                    self.in_service = self.queues[candidate].popleft()
                    self.last_served = candidate
                    break

        self._observe(finished)
        return finished

    def _observe(self, finished: list[Demand]) -> None:
        # The in-service demand still counts toward its class: queue size
        # measures the work (or demands) not yet fully executed per class.
        if self.config.queue_measure == "count":
            row = [float(len(q)) for q in self.queues]
            if self.in_service is not None:
                row[self.in_service.class_id] += 1.0
        else:
            row = [float(sum(item.remaining for item in q)) for q in self.queues]
            if self.in_service is not None:
                row[self.in_service.class_id] += self.in_service.remaining
        self._queue_rows.append(row)
        self._counts.append(len(finished))
        self._latency_sums.append(float(sum(item.latency for item in finished)))

    @property
    def in_system(self) -> int:
        """Demands currently queued or in service."""
        queued = sum(len(q) for q in self.queues)
        return queued + (1 if self.in_service is not None else 0)

    def build_trace(self) -> SimulationTrace:
        state = self.rng.bit_generator.state
        digest = hashlib.sha256(
            json.dumps(state, sort_keys=True, default=int).encode()
        ).hexdigest()
        horizon = self.t + 1
        return SimulationTrace(
            config=self.config,
            times=np.arange(horizon),
            queue_sizes=np.asarray(self._queue_rows, dtype=float).reshape(horizon, -1),
            completion_counts=np.asarray(self._counts, dtype=int),
            latency_sums=np.asarray(self._latency_sums, dtype=float),
            completed=tuple(self.completed),
            arrivals=self.arrivals,
            rng_digest=digest,
        )


def run(config: SimulationConfig, max_auto_steps: int = MAX_AUTO_STEPS) -> SimulationTrace:
    """Simulate for the configured horizon, or auto-extend when horizon is 0.

    Auto-extension stops as soon as extract_dataset would yield
    num_train + num_test rows, and fails once max_auto_steps ticks pass
    without reaching that count.
    """
    sim = Simulation(config)
    if config.horizon > 0:
        for _ in range(config.horizon):
            sim.step()
        return sim.build_trace()

    needed = config.num_train + config.num_test
    window = config.window
    recent = deque(maxlen=window)
    samples = 0
    while samples < needed:
        if sim.t + 1 >= max_auto_steps:
            raise SimulationLimitError(
                f"auto-extend exceeded {max_auto_steps} steps with only "
                f"{samples}/{needed} extractable samples"
            )
        finished = sim.step()
        recent.append(len(finished))
        if sim.t >= window and sum(recent) > 0:
            samples += 1
    return sim.build_trace()


def extract_dataset(trace: SimulationTrace, window: int) -> Dataset:
    """Sliding-window regression rows from a trace.

    For each time t >= window, the window covers the observations at times
    t-window+1 .. t.  Windows containing at least one completion emit a
    row: features are the per-class mean queue sizes over the window (or
    the values at t under the "instantaneous" mode), the target is the
    mean latency of the demands completing inside the window.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if len(trace) < window:
        raise ValueError(
            f"trace has {len(trace)} observations, fewer than window {window}"
        )
    instantaneous = trace.config.feature_mode == "instantaneous"
    rows = []
    targets = []
    for t in range(window, len(trace)):
        lo = t - window + 1
        count = int(trace.completion_counts[lo : t + 1].sum())
        if count == 0:
            continue
        if instantaneous:
            feature = trace.queue_sizes[t]
        else:
            feature = trace.queue_sizes[lo : t + 1].mean(axis=0)
        rows.append(feature)
        targets.append(trace.latency_sums[lo : t + 1].sum() / count)
    if not rows:
        raise ValueError(f"no window of length {window} contains a completion")
    return Dataset(np.asarray(rows, dtype=float), np.asarray(targets, dtype=float))


def write_trace_csv(trace: SimulationTrace, path: str | Path) -> None:
    dim = trace.config.num_classes
    header = "t," + ",".join(f"q_{i + 1}" for i in range(dim)) + ",completions,mean_latency"
    lines = [header]
    for i, t in enumerate(trace.times):
        count = int(trace.completion_counts[i])
        mean_latency = trace.latency_sums[i] / count if count else float("nan")
        qs = ",".join(_fmt(v) for v in trace.queue_sizes[i])
        lines.append(f"{int(t)},{qs},{count},{_fmt(mean_latency)}")
    Path(path).write_text("\n".join(lines) + "\n")
