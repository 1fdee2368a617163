"""Green function of the Hardy-Laplace operator at the origin and annulus capacities.

``G`` solves ``-Lap G - G/(1-r^2)^2 - alpha G = delta_0`` with ``G = 0`` on the
(truncated) boundary.  The unknown actually discretized is the regular part

    w = G + log(r) / (2 pi),      -Lap w = (V + alpha) (w - log(r)/(2 pi)),

which is bounded and C^1 at the origin, so ``A0 = w(0)`` is a regular point
value and no approximate Dirac mass is ever assembled.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp

from .errors import DomainError, EvaluationError, ParameterError
from .forms import QuadraticForms, assemble_forms
from .radial import RadialFunction, RadialGrid, integrate_disc

TWO_PI = 2.0 * np.pi
MODES = ("hardy", "pure_laplace")


def log_kernel(r):
    """``log(r) / (2 pi)``, the negative of the planar fundamental solution."""
    return np.log(r) / TWO_PI


@dataclass(frozen=True, eq=False)
class GreenResult:
    G: RadialFunction
    regular_part: RadialFunction
    A0: float
    alpha: float
    flux_defect: float
    A0_error_estimate: float = 0.0
    mode: str = "hardy"

    @property
    def grid(self) -> RadialGrid:
        return self.G.grid

    def record(self) -> dict:
        return {
            "alpha": self.alpha,
            "A0": self.A0,
            "A0_error_estimate": self.A0_error_estimate,
            "flux_defect": self.flux_defect,
            "n": int(self.grid.n),
            "mode": self.mode,
        }

    def to_json(self) -> str:
        return json.dumps(self.record(), sort_keys=True)

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "G", "w"])
            for row in zip(self.grid.nodes, self.G.values, self.regular_part.values):
                w.writerow([f"{v:.17g}" for v in row])


def _laplace_forms(forms: QuadraticForms) -> QuadraticForms:
    z = np.zeros_like(forms.hardy_diag)
    from dataclasses import replace

    return replace(forms, hardy_diag=z, hardy_off=z[:-1].copy(), alpha=0.0)


def solve_green(
    alpha: float,
    grid: RadialGrid,
    mode: str = "hardy",
    forms: Optional[QuadraticForms] = None,
) -> GreenResult:
    """Green function at the origin via the regularized splitting.

    The linear system ``(S - H - alpha M) w = -(H + alpha M) l`` (``l`` the log
    kernel) is solved directly with the banded Cholesky factor, with
    ``w = l`` imposed at the outer node so that ``G`` vanishes there.  In
    ``pure_laplace`` mode the potential and ``alpha`` are switched off.
    """
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if forms is None:
        forms = assemble_forms(grid)
    elif forms.grid is not grid:
        raise EvaluationError("forms were assembled on a different grid")
    if mode == "pure_laplace":
        alpha = 0.0
        forms = _laplace_forms(forms)
        op = forms.with_alpha(0.0)
    else:
        if alpha < 0:
            raise ParameterError("alpha must be nonnegative")
        op = forms.with_alpha(alpha)
        try:
            op.check_alpha()
        except DomainError as exc:
            raise DomainError(f"operator not coercive at alpha={alpha}: {exc}") from exc

    r = grid.nodes
    ell = log_kernel(r)
    # (H + alpha M) ell, full vector
    rhs_full = -(op.hardy_apply(ell) + alpha * op.mass * ell)
    w_b = ell[-1]
    # move the known boundary value to the right-hand side
    k_last = op.stiff_off[-1] - op.hardy_off[-1]
    rhs = rhs_full[:-1].copy()
    rhs[-1] -= k_last * w_b
    w_free = op.solve(rhs)
    w = np.append(w_free, w_b)
    if not np.all(np.isfinite(w)):
        raise EvaluationError("regular part is not finite")
    G = w - ell
    G[-1] = 0.0
    A0, err = _extrapolate(r, w)
    slope = (w[1] - w[0]) / (r[1] - r[0])
    flux = 1.0 - TWO_PI * r[0] * slope
    return GreenResult(
        G=RadialFunction(grid, G, 0.0),
        regular_part=RadialFunction(grid, w, w_b),
        A0=A0,
        alpha=float(alpha),
        flux_defect=float(abs(flux - 1.0)),
        A0_error_estimate=err,
        mode=mode,
    )


def _extrapolate(r: np.ndarray, w: np.ndarray):
    """Linear extrapolation of ``w`` to 0 from the two innermost nodes.

    The error estimate is the spread of ``w`` over the innermost decade; it
    bounds the ``O(r)`` remainder that the extrapolation removes.
    """
    a0 = w[0] - r[0] * (w[1] - w[0]) / (r[1] - r[0])
    decade = r <= 10.0 * r[0]
    spread = float(np.max(np.abs(w[decade] - w[0])))
    if not np.isfinite(a0) or spread > 1e-2 * max(1.0, abs(a0)):
        raise EvaluationError("regular part is not bounded near 0: singularity subtraction failed")
    return float(a0), spread


def extract_A0(res: GreenResult) -> tuple[float, float]:
    """``(A0, error_estimate)`` from the regular part of a Green solve."""
    return _extrapolate(res.grid.nodes, res.regular_part.values)


def log_model_l2_tail(rho: float, A0: float) -> float:
    """``int_{B_rho} (-log(r)/(2 pi) + A0)^2 dx`` in closed form.

    With ``L = log rho`` and ``a = -1/(2 pi)``:
    ``int_0^rho r (a L + A)^2 dr = rho^2/2 (a L + A)^2 - a rho^2/2 (a L + A) + a^2 rho^2/4``.
    """
    a, L = -1.0 / TWO_PI, np.log(rho)
    q = a * L + A0
    return float(TWO_PI * (0.5 * rho ** 2 * q * q - 0.5 * a * rho ** 2 * q + 0.25 * a * a * rho ** 2))


def green_l2_sq(res: GreenResult) -> float:
    """``int_B G^2 dx``; below ``r_min`` the model ``G = -log(r)/(2 pi) + A0`` is integrated exactly."""
    g = res.G
    r0 = g.grid.nodes[0]
    body = integrate_disc(g.with_values(g.values ** 2, 0.0)) - np.pi * r0 ** 2 * g.values[0] ** 2
    return float(body + log_model_l2_tail(r0, res.A0))


def integrated_flux(res: GreenResult, r: float) -> float:
    """``2 pi r (-G'(r)) - int_{B_r} (V + alpha) G dx``; equals 1 for an exact solution."""
    grid = res.grid
    k = grid.index_of(r)
    k = min(max(k, 1), grid.n - 2)
    nodes, w = grid.nodes, res.regular_part.values
    rm = 0.5 * (nodes[k] + nodes[k + 1])
    dw = (w[k + 1] - w[k]) / (nodes[k + 1] - nodes[k])
    flux = 1.0 - TWO_PI * rm * dw
    g = res.G.values
    dens = g * (1.0 / (1.0 - nodes ** 2) ** 2 + res.alpha)
    inner = integrate_disc(res.G.with_values(dens, 0.0), r_hi=rm)
    return float(flux - inner)


# ----------------------------------------------------------------------------
# shooting oracle


def _ode_inner(r, y, alpha):
    # y = [w_h, w_h', w_p, w_p'];  w'' + w'/r = -(V + alpha) (w - l) for w_p, homogeneous for w_h
    v = 1.0 / (1.0 - r * r) ** 2 + alpha
    ell = log_kernel(r)
    return [y[1], -y[1] / r - v * y[0], y[3], -y[3] / r - v * (y[2] - ell)]


def _ode_outer(s, y, alpha):
    # homogeneous G in s = log(1 - r): G_ss = G_s + t G_s / r - t^2 (V + alpha) G
    t = np.exp(s)
    r = 1.0 - t
    t2v = 1.0 / (2.0 - t) ** 2 + alpha * t * t
    return [y[1], y[1] + t * y[1] / r - t2v * y[0]]


def shooting_A0(alpha: float, delta_b: float, mode: str = "hardy", r_start: float = 1e-6,
                r_match: float = 0.5, rtol: float = 1e-12) -> float:
    """``A0`` from the radial ODE integrated from both ends and matched at ``r_match``.

    Inner side: ``w = w_p + A0 w_h`` with ``w_h(0) = 1`` and ``w_p(0) = 0`` (both
    with zero slope), started from the two-term series at ``r_start``.  Outer
    side: the homogeneous equation for ``G`` in the variable ``log(1 - r)``,
    started from ``G = 0`` at ``1 - delta_b``.  Matching ``G`` and ``G'`` is a
    2x2 linear system.
    """
    if mode == "pure_laplace":
        return float(log_kernel(1.0 - delta_b))
    c = 1.0 + alpha
    r0 = r_start
    y0 = [
        1.0 - c * r0 * r0 / 4.0,
        -c * r0 / 2.0,
        c / TWO_PI * (r0 * r0 * np.log(r0) / 4.0 - r0 * r0 / 4.0),
        c / TWO_PI * (r0 * np.log(r0) / 2.0 - r0 / 4.0),
    ]
    inner = solve_ivp(_ode_inner, (r0, r_match), y0, args=(alpha,), method="DOP853",
                      rtol=rtol, atol=1e-14)
    wh, dwh, wp, dwp = inner.y[:, -1]
    s_b, s_m = np.log(delta_b), np.log(1.0 - r_match)
    outer = solve_ivp(_ode_outer, (s_b, s_m), [0.0, 1.0], args=(alpha,), method="DOP853",
                      rtol=rtol, atol=1e-14)
    g, gs = outer.y[:, -1]
    t_m = 1.0 - r_match
    dg = -gs / t_m  # dG/dr
    ell, dell = log_kernel(r_match), 1.0 / (TWO_PI * r_match)
    # A wh + wp - ell = beta g ;  A dwh + dwp - dell = beta dg
    mat = np.array([[wh, -g], [dwh, -dg]])
    rhs = np.array([ell - wp, dell - dwp])
    A0, _ = linalg.solve(mat, rhs)
    return float(A0)


# ----------------------------------------------------------------------------
# annulus capacity toolkit


def capacity_energy(a: float, b: float, s: float, r: float) -> float:
    """``2 pi (b - a)^2 / log(r / s)``, the least Dirichlet energy on ``s < |x| < r``."""
    if not (0.0 < s < r):
        raise ParameterError(f"need 0 < s < r, got s={s!r}, r={r!r}")
    return float(TWO_PI * (b - a) ** 2 / np.log(r / s))


def _annulus_grid(grid: RadialGrid, s: float, r: float, max_log_step: float) -> RadialGrid:
    if not (grid.nodes[0] <= s < r <= grid.nodes[-1]):
        raise DomainError(f"annulus [{s}, {r}] is outside the grid [{grid.nodes[0]}, {grid.nodes[-1]}]")
    m = int(np.ceil(np.log(r / s) / max_log_step))
    return grid.with_nodes(np.concatenate(([s, r], np.geomspace(s, r, m + 1))))


def harmonic_annulus(a: float, b: float, s: float, r: float, grid: RadialGrid,
                     max_log_step: float = 1e-3) -> RadialFunction:
    """``h = (b log(|x|/s) + a log(r/|x|)) / log(r/s)``, constant outside the annulus.

    The grid is augmented with ``s``, ``r`` and geometric nodes of log-spacing
    at most ``max_log_step`` inside the annulus; the piecewise-linear energy of
    ``h`` then matches the capacity to relative ``~max_log_step^2 / 12``.
    """
    if not (0.0 < s < r):
        raise ParameterError(f"need 0 < s < r, got s={s!r}, r={r!r}")
    g = _annulus_grid(grid, s, r, max_log_step)
    x = np.clip(g.nodes, s, r)
    vals = (b * np.log(x / s) + a * np.log(r / x)) / np.log(r / s)
    k_s, k_r = g.index_of(s), g.index_of(r)
    vals[k_s], vals[k_r] = a, b
    return RadialFunction(g, vals, float(vals[-1]))


def annulus_dirichlet_energy(u: RadialFunction, s: float, r: float) -> float:
    """``2 pi int_s^r u'(t)^2 t dt`` for the piecewise-linear ``u`` (exact per cell)."""
    g = u.grid
    if not (g.nodes[0] <= s < r <= g.nodes[-1]):
        raise DomainError("annulus bounds outside the grid")
    k_s, k_r = g.index_of(s), g.index_of(r)
    if k_r <= k_s:
        return 0.0
    nodes = g.nodes[k_s:k_r + 1]
    du = np.diff(u.values[k_s:k_r + 1])
    h = np.diff(nodes)
    return float(np.pi * np.sum(du * du * (nodes[1:] + nodes[:-1]) / h))


def upper_bound(A0: float) -> float:
    """``pi + pi exp(1 + 4 pi A0)``."""
    return float(np.pi + np.pi * np.exp(1.0 + 4.0 * np.pi * A0))
