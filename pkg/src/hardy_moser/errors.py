"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument lies outside its admissible range."""


class DomainError(ValueError):
    """The request is mathematically outside the operator's domain (e.g. alpha >= lambda1)."""


class EvaluationError(ValueError):
    """A quantity could not be evaluated (non-finite data, grid mismatch)."""


class SingularDomainError(EvaluationError):
    """The grid touches r = 1 where the Hardy weight blows up."""


class AssemblyError(RuntimeError):
    """Discrete forms violate a structural property (discrete Hardy positivity)."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace or []


class ResolutionError(ValueError):
    """The grid is too coarse to represent a requested feature."""
