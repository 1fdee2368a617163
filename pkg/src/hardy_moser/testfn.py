"""Bubble-glued test functions and the strict lower bound they produce.

For ``R = -log eps`` the profile is

    phi = c + (b(r) + B)/c   for r <= R eps,      phi = G(r)/c   beyond,

with ``b(r) = -log(1 + pi r^2/eps^2)/(4 pi)`` and ``G`` the Green function.
Writing ``Psi = c phi`` removes ``c`` entirely: continuity at ``R eps`` forces
``Psi = G(R eps) + b(r) - b(R eps)`` inside, so ``Psi`` is known once ``G`` is.
The unit-norm condition is then ``c = ||Psi||_{1,alpha}`` and continuity gives
``B = G(R eps) - b(R eps) - c^2``: the "exact" constants are closed-form.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bubble import bubble_energy_asymptote
from .errors import EvaluationError, ParameterError, ResolutionError
from .forms import QuadraticForms, assemble_forms, norm_1alpha_sq
from .green import GreenResult, green_l2_sq, solve_green, upper_bound
from .radial import RadialFunction, RadialGrid, build_grid, dirichlet_energy, integrate_disc

FOUR_PI = 4.0 * np.pi
CORE_NODES = 200
MODES = ("exact", "asymptotic")


def _check_eps(eps: float) -> float:
    if not (0.0 < eps < np.exp(-1.0)):
        raise ParameterError(f"eps must lie in (0, 1/e), got {eps!r}")
    R = -np.log(eps)
    if R * eps >= 1.0:
        raise ParameterError("R eps must be < 1")
    return float(R)


def _bubble_log(r, eps):
    return -np.log1p(np.pi * (np.asarray(r) / eps) ** 2) / FOUR_PI


def testfn_grid(eps: float, base: RadialGrid, core_nodes: int = CORE_NODES) -> RadialGrid:
    """``base`` plus geometric nodes on ``[eps/10, 2 R eps]`` and the node ``R eps``."""
    R = _check_eps(eps)
    pts = np.concatenate((np.geomspace(eps / 10.0, 2.0 * R * eps, core_nodes), [R * eps]))
    return base.with_nodes(pts)


def _glued_profile(eps: float, green: GreenResult) -> np.ndarray:
    """``Psi = c phi``: inner bubble branch glued continuously to ``G`` at ``R eps``."""
    R = _check_eps(eps)
    grid = green.grid
    re = R * eps
    if not grid.has_node(re):
        raise ResolutionError(f"grid has no node at R eps = {re:.6e}; build it with testfn_grid")
    k = grid.index_of(re)
    r = grid.nodes
    g = green.G.values
    psi = g.copy()
    psi[: k + 1] = g[k] + _bubble_log(r[: k + 1], eps) - _bubble_log(re, eps)
    return psi


def solve_constants(
    eps: float,
    A0: float,
    mode: str = "exact",
    *,
    green: Optional[GreenResult] = None,
    forms: Optional[QuadraticForms] = None,
) -> tuple[float, float, float]:
    """``(R, c, B)`` for the test function at scale ``eps``.

    ``asymptotic``: ``2 pi c^2 = R + 2 pi A0 + log(pi)/2 - 1/2`` and ``B = 1/(4 pi)``.
    ``exact``: continuity at ``R eps`` and ``||phi||_{1,alpha} = 1`` on the discrete
    forms, which requires the Green solve ``green`` and ``forms`` on its grid.
    """
    R = _check_eps(eps)
    if mode == "asymptotic":
        c2 = (R + 2 * np.pi * A0 + 0.5 * np.log(np.pi) - 0.5) / (2 * np.pi)
        if c2 <= 0:
            raise ParameterError("asymptotic c^2 is not positive; eps too large for this A0")
        return R, float(np.sqrt(c2)), float(1.0 / FOUR_PI)
    if mode != "exact":
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if green is None or forms is None:
        raise ParameterError("exact mode needs the Green solve and the forms")
    if forms.grid is not green.grid:
        raise EvaluationError("forms and Green function live on different grids")
    if abs(green.A0 - A0) > 1e-12 * max(1.0, abs(A0)):
        raise ParameterError("A0 does not match the Green solve")
    psi = _glued_profile(eps, green)
    c2 = norm_1alpha_sq(psi, forms, green.alpha)
    if not np.isfinite(c2) or c2 <= 0:
        raise EvaluationError(f"glued profile has non-positive norm ({c2})")
    g_re = green.G(R * eps)
    B = g_re - _bubble_log(R * eps, eps) - c2
    return R, float(np.sqrt(c2)), float(B)


@dataclass(frozen=True, eq=False)
class TestFunctionBundle:
    __test__ = False  # not a pytest class

    eps: float
    R: float
    A0: float
    c: float
    B: float
    phi: RadialFunction
    norm_1alpha: float
    integral: float
    bound: float
    margin: float
    alpha: float = 0.0
    mode: str = "exact"
    continuity_defect: float = 0.0

    def record(self) -> dict:
        return {
            "eps": self.eps,
            "R": self.R,
            "c": self.c,
            "B": self.B,
            "A0": self.A0,
            "alpha": self.alpha,
            "norm": self.norm_1alpha,
            "integral": self.integral,
            "bound": self.bound,
            "margin": self.margin,
        }


def build_test_function(
    eps: float,
    alpha: float,
    green: GreenResult,
    constants: tuple[float, float, float],
    forms: QuadraticForms,
    mode: str = "exact",
) -> TestFunctionBundle:
    """Realize the piecewise test function on ``green.grid`` and evaluate it."""
    if abs(green.alpha - alpha) > 0:
        raise ParameterError("green.alpha differs from alpha")
    if forms.grid is not green.grid:
        raise EvaluationError("forms and Green function live on different grids")
    R, c, B = constants
    if abs(R + np.log(eps)) > 1e-12 * R:
        raise ParameterError("constants were computed for a different eps")
    grid = green.grid
    re = R * eps
    if not grid.has_node(re):
        raise ResolutionError(f"grid has no node at R eps = {re:.6e}")
    k = grid.index_of(re)
    r = grid.nodes
    vals = green.G.values / c
    vals[: k + 1] = c + (_bubble_log(r[: k + 1], eps) + B) / c
    defect = abs(vals[k] - green.G.values[k] / c)
    vals[k] = green.G.values[k] / c if mode == "asymptotic" else vals[k]
    phi = RadialFunction(grid, vals, 0.0)
    norm = float(np.sqrt(norm_1alpha_sq(phi, forms, alpha)))
    integral = integrate_disc(phi.with_values(np.exp(FOUR_PI * vals ** 2), 1.0))
    bound = upper_bound(green.A0)
    return TestFunctionBundle(
        eps=float(eps), R=float(R), A0=float(green.A0), c=float(c), B=float(B), phi=phi,
        norm_1alpha=norm, integral=float(integral), bound=bound, margin=float(integral - bound),
        alpha=float(alpha), mode=mode, continuity_defect=float(defect),
    )


@dataclass(frozen=True)
class LowerBoundReport:
    eps: float
    alpha: float
    R: float
    c: float
    B: float
    A0: float
    norm: float
    integral: float
    bound: float
    margin: float
    predicted_margin: float
    green_l2: float
    inner_integral: float
    inner_target: float
    inner_energy: float
    inner_energy_model: float
    continuity_defect: float
    passed: bool

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def verify_lower_bound(bundle: TestFunctionBundle, forms: QuadraticForms, green: GreenResult,
                       norm_tol: float = 1e-6) -> LowerBoundReport:
    """Check ``||phi|| <= 1 + tol`` and ``int exp(4 pi phi^2) > pi + pi e^{1 + 4 pi A0}``.

    The predicted margin is ``(4 pi / c^2) int G^2``; the inner-disc integral
    and inner Dirichlet energy are reported against their bubble models.
    """
    phi = bundle.phi
    re = bundle.R * bundle.eps
    g2 = green_l2_sq(green)
    inner = integrate_disc(phi.with_values(np.exp(FOUR_PI * phi.values ** 2), 1.0), r_hi=re)
    e_in = dirichlet_energy(phi, r_hi=re)
    passed = bool(bundle.norm_1alpha <= 1.0 + norm_tol and bundle.margin > 0.0)
    return LowerBoundReport(
        eps=bundle.eps, alpha=bundle.alpha, R=bundle.R, c=bundle.c, B=bundle.B, A0=bundle.A0,
        norm=bundle.norm_1alpha, integral=bundle.integral, bound=bundle.bound,
        margin=bundle.margin, predicted_margin=float(FOUR_PI / bundle.c ** 2 * g2),
        green_l2=g2, inner_integral=float(inner),
        inner_target=float(np.pi * np.exp(1.0 + FOUR_PI * bundle.A0)),
        inner_energy=float(e_in),
        inner_energy_model=float(bubble_energy_asymptote(bundle.R) / bundle.c ** 2),
        continuity_defect=bundle.continuity_defect, passed=passed,
    )


def run_test_function(eps: float, alpha: float, base: Optional[RadialGrid] = None,
                      mode: str = "exact", check_alpha: bool = True) -> LowerBoundReport:
    """Full pipeline: grid, forms, Green solve, constants, bundle, report."""
    base = base or build_grid()
    grid = testfn_grid(eps, base)
    forms = assemble_forms(grid)
    if check_alpha:
        forms.with_alpha(alpha).check_alpha()
    green = solve_green(alpha, grid, "hardy", forms)
    consts = solve_constants(eps, green.A0, mode, green=green, forms=forms)
    bundle = build_test_function(eps, alpha, green, consts, forms, mode)
    return verify_lower_bound(bundle, forms, green)
