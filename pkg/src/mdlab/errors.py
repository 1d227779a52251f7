"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConsistencyError(ValueError):
    """Two objects that must describe the same model disagree."""


class NumericError(ArithmeticError):
    """A quantity needed for a computation is degenerate (zero, underflowed)."""


class DegeneratePathError(NumericError):
    """A simulated or injected path has a zero least-squares denominator."""


class ReplicateError(RuntimeError):
    """A replicate failed inside the Monte Carlo engine."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"replicate {index}: {cause}")
        self.index = index
        self.cause = cause
