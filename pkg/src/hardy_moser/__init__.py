"""Numerical toolkit for the Hardy-Trudinger-Moser inequality on the unit disc."""
from .errors import (
    AssemblyError,
    DomainError,
    EvaluationError,
    ParameterError,
    ResolutionError,
    SingularDomainError,
    SolverError,
)
from .radial import RadialFunction, RadialGrid, build_grid, integrate_disc
from .forms import QuadraticForms, assemble_forms, first_eigenvalue, norm_1alpha_sq, norm_H_sq

__all__ = [
    "AssemblyError",
    "DomainError",
    "EvaluationError",
    "ParameterError",
    "ResolutionError",
    "SingularDomainError",
    "SolverError",
    "RadialFunction",
    "RadialGrid",
    "build_grid",
    "integrate_disc",
    "QuadraticForms",
    "assemble_forms",
    "first_eigenvalue",
    "norm_1alpha_sq",
    "norm_H_sq",
]
