"""Exception hierarchy shared across the package."""

from __future__ import annotations


class BranchFreqError(Exception):
    """Base class for domain errors (the CLI maps these to exit code 1)."""


class SpecError(BranchFreqError, ValueError):
    """A process specification violates one or more invariants.

    ``violations`` holds ``(field_path, message)`` pairs for every problem
    found, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{path}: {text}" for path, text in self.violations)
        super().__init__(msg or "invalid specification")


class ProbabilityMassError(SpecError):
    pass


class DimensionError(SpecError):
    pass


class MissingLifespanError(SpecError):
    pass


class ParameterError(BranchFreqError, ValueError):
    pass


class MomentOverflowError(BranchFreqError, OverflowError):
    pass


class UndefinedCorrelationError(BranchFreqError, ValueError):
    pass


class ZeroPopulationError(BranchFreqError, ValueError):
    pass


class DegenerateCovarianceError(BranchFreqError, ValueError):
    pass


class NonFiniteError(BranchFreqError, ValueError):
    pass


class ExtinctError(BranchFreqError, ValueError):
    pass


class AllExtinctError(BranchFreqError, RuntimeError):
    pass


class StateSpaceError(BranchFreqError, RuntimeError):
    pass


class NonConvergenceError(BranchFreqError, RuntimeError):
    pass


class InfeasibleInitError(BranchFreqError, ValueError):
    pass
