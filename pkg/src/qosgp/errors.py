"""Exception types shared across the toolkit.

Invalid inputs (bad dimensions, empty data, out-of-range settings) raise
plain ``ValueError``; the classes below cover failures that appear only
at runtime.
"""


class NumericalError(ArithmeticError):
    """A numerical procedure failed beyond recoverable tolerance.

    Raised when Cholesky factorization fails after jitter escalation,
    when a predictive variance is negative past round-off scale, or when
    the hyperparameter optimizer meets a non-finite objective.
    """


class SimulationLimitError(RuntimeError):
    """The simulator exceeded its step budget before producing enough samples."""


class ConfigError(ValueError):
    """An experiment config file is missing, malformed, or inconsistent."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(prefix + message)
