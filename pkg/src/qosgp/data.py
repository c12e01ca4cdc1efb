"""Regression datasets: feature rows paired with latency targets, plus CSV I/O."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """N feature vectors (nonnegative queue-size summaries) with N latency targets."""

    X: np.ndarray  # (N, D)
    y: np.ndarray  # (N,)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("X must be a nonempty 2-D array of shape (N, D)")
        if y.shape != (X.shape[0],):
            raise ValueError(f"y has length {y.shape}, expected ({X.shape[0]},)")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        if np.any(X < 0):
            raise ValueError("feature entries are queue sizes and must be >= 0")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def split_train_test(
    dataset: Dataset,
    num_train: int,
    num_test: int,
    policy: str = "temporal",
    seed: int | None = None,
) -> tuple[Dataset, Dataset]:
    """Split rows into a training and a test set.

    ``temporal`` takes the first ``num_train`` rows for training and the next
    ``num_test`` for testing, preserving time order.  ``random`` draws a
    seeded permutation first.
    """
    n = len(dataset)
    if num_train < 1 or num_test < 1:
        raise ValueError("num_train and num_test must be >= 1")
    if num_train + num_test > n:
        raise ValueError(
            f"dataset has {n} rows, need num_train + num_test = {num_train + num_test}"
        )
    if policy == "temporal":
        order = np.arange(n)
    elif policy == "random":
        if seed is None:
            raise ValueError("random split requires a seed")
        order = np.random.default_rng(seed).permutation(n)
    else:
        raise ValueError(f"unknown split policy {policy!r}")
    tr = order[:num_train]
    te = order[num_train : num_train + num_test]
    return (
        Dataset(dataset.X[tr], dataset.y[tr]),
        Dataset(dataset.X[te], dataset.y[te]),
    )


def _fmt(v: float) -> str:
    """Shortest round-trip decimal form; keeps CSV output byte-reproducible."""
    return repr(float(v))


def write_dataset_csv(dataset: Dataset, path: str | Path) -> None:
    """Write rows as ``x_1,...,x_D,y`` with a mandatory header."""
    path = Path(path)
    header = ",".join(f"x_{d + 1}" for d in range(dataset.dim)) + ",y"
    lines = [header]
    for row, target in zip(dataset.X, dataset.y):
        lines.append(",".join(_fmt(v) for v in row) + "," + _fmt(target))
    path.write_text("\n".join(lines) + "\n")


def read_dataset_csv(path: str | Path) -> Dataset:
    path = Path(path)
    rows = _read_numeric_csv(path, min_columns=2)
    data = np.asarray(rows, dtype=float)
    return Dataset(data[:, :-1], data[:, -1])


def read_feature_csv(path: str | Path, dim: int) -> np.ndarray:
    """Read prediction inputs ``x_1,...,x_D``; an empty body yields shape (0, dim)."""
    path = Path(path)
    rows = _read_numeric_csv(path, min_columns=1, allow_empty=True)
    if not rows:
        return np.empty((0, dim))
    data = np.asarray(rows, dtype=float)
    if data.shape[1] != dim:
        raise ValueError(f"{path}: rows have {data.shape[1]} columns, expected {dim}")
    return data


def _read_numeric_csv(path: Path, min_columns: int, allow_empty: bool = False) -> list[list[float]]:
    text = path.read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty CSV, expected a header row")
    rows = []
    for idx, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) < min_columns:
            raise ValueError(f"{path}:{idx}: expected at least {min_columns} columns")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"{path}:{idx}: non-numeric value ({exc})") from None
    if not rows and not allow_empty:
        raise ValueError(f"{path}: no data rows")
    return rows
