"""Exception types shared across the package."""
from __future__ import annotations

__all__ = [
    "TranscritError",
    "ParameterError",
    "DivergenceError",
    "CapReachedError",
    "ChartDomainError",
    "DesingularizationError",
    "InvariantBreachError",
    "ConvergenceError",
    "StepSizeUnderflowError",
]


class TranscritError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(TranscritError, ValueError):
    """A parameter set violates a validity or hypothesis constraint."""


class DivergenceError(TranscritError, ArithmeticError):
    """An iterate left the finite (or configured) region.

    Parameters
    ----------
    step : int
        Index of the first offending iterate.
    state : tuple
        The offending iterate, as far as it could be formed.
    """

    def __init__(self, step: int, state: tuple, reason: str = "non-finite") -> None:
        self.step = int(step)
        self.state = tuple(state)
        self.reason = reason
        super().__init__(f"divergence ({reason}) at step {self.step}: {self.state}")


class CapReachedError(TranscritError, RuntimeError):
    """An iteration ran into its hard cap without a usable result."""

    def __init__(self, cap: int, detail: str = "") -> None:
        self.cap = int(cap)
        msg = f"iteration cap {self.cap} reached"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class ChartDomainError(TranscritError, ValueError):
    """A chart operation was called outside its domain.

    Parameters
    ----------
    coordinate : str
        Name of the offending coordinate.
    value : float
        Its value.
    """

    def __init__(self, coordinate: str, value: float, requirement: str) -> None:
        self.coordinate = coordinate
        self.value = value
        super().__init__(f"{coordinate}={value!r} violates {requirement}")


class DesingularizationError(ChartDomainError):
    """The chart-map denominator 1 -/+ h*F became non-positive."""


class InvariantBreachError(TranscritError, AssertionError):
    """A structural property asserted along a passage was violated."""

    def __init__(self, what: str, step: int) -> None:
        self.what = what
        self.step = int(step)
        super().__init__(f"{what} violated at step {self.step}")


class ConvergenceError(TranscritError, RuntimeError):
    """An iterative solver exhausted its budget."""


class StepSizeUnderflowError(TranscritError, RuntimeError):
    """The adaptive reference integrator could not make progress."""
