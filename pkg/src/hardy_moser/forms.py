"""Quadratic forms of the Hardy space and the first Hardy-Laplace eigenvalue.

Discretization: continuous piecewise-linear functions on the radial grid.  The
Dirichlet form and the Hardy form are integrated exactly (Gauss-Legendre per
cell for the Hardy weight), so both are tridiagonal and the discrete Rayleigh
quotient is the true quotient of a piecewise-linear function.  This matters:
near ``r = 1`` both integrals diverge like ``log(1/delta_b)`` for Hardy-space
profiles and only their difference is finite, so independent quadrature errors
in the two terms do not cancel.  The L^2 mass is lumped onto the disc weights
of :attr:`RadialGrid.weights` (diagonal).  Members of the Hardy space are
represented with the last node pinned to zero, i.e. the disc is truncated at
``1 - delta_b``; all solves act on the remaining ``n - 1`` nodes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg

from .errors import AssemblyError, DomainError, EvaluationError, ParameterError, SolverError
from .radial import RadialFunction, RadialGrid

ALPHA_MARGIN = 1e-8


@dataclass(frozen=True, eq=False)
class QuadraticForms:
    """Assembled stiffness and Hardy forms (tridiagonal) and lumped mass (diagonal)."""

    grid: RadialGrid
    stiff_diag: np.ndarray
    stiff_off: np.ndarray
    hardy_diag: np.ndarray
    hardy_off: np.ndarray
    mass: np.ndarray
    alpha: float = 0.0

    # -- form evaluation on full nodal vectors -------------------------------
    def _vals(self, u) -> np.ndarray:
        if isinstance(u, RadialFunction):
            if u.grid is not self.grid and not np.array_equal(u.grid.nodes, self.grid.nodes):
                raise EvaluationError("function and forms live on different grids")
            return u.values
        v = np.asarray(u, dtype=float)
        if v.shape != (self.grid.n,):
            raise EvaluationError(f"expected {self.grid.n} nodal values, got shape {v.shape}")
        return v

    def stiffness_form(self, u, v=None) -> float:
        a = self._vals(u)
        b = a if v is None else self._vals(v)
        # difference form sum_k c_k (a_{k+1} - a_k)(b_{k+1} - b_k); the nodal
        # form cancels entries of size ~1/(delta_b * grading) near r = 1
        return float(np.dot(-self.stiff_off * np.diff(a), np.diff(b)))

    def hardy_form(self, u, v=None) -> float:
        a = self._vals(u)
        b = a if v is None else self._vals(v)
        return float(np.dot(a, self.hardy_diag * b)
                     + np.dot(a[:-1], self.hardy_off * b[1:])
                     + np.dot(a[1:], self.hardy_off * b[:-1]))

    def mass_form(self, u, v=None) -> float:
        a = self._vals(u)
        b = a if v is None else self._vals(v)
        return float(np.dot(a, self.mass * b))

    def stiffness_apply(self, x: np.ndarray) -> np.ndarray:
        y = self.stiff_diag * x
        y[:-1] += self.stiff_off * x[1:]
        y[1:] += self.stiff_off * x[:-1]
        return y

    def hardy_apply(self, x: np.ndarray) -> np.ndarray:
        y = self.hardy_diag * x
        y[:-1] += self.hardy_off * x[1:]
        y[1:] += self.hardy_off * x[:-1]
        return y

    def operator_apply(self, x: np.ndarray, alpha: float | None = None) -> np.ndarray:
        """``(S - H - alpha M) x`` on full nodal vectors."""
        a = self.alpha if alpha is None else alpha
        return self.stiffness_apply(x) - self.hardy_apply(x) - a * self.mass * x

    # -- interior (Dirichlet at the last node) operators ---------------------
    def banded(self, alpha: float | None = None, shift_mass: float = 0.0) -> np.ndarray:
        """Upper banded storage of ``S - H - (alpha + shift) M`` on the free nodes."""
        a = self.alpha if alpha is None else alpha
        ab = np.zeros((2, self.grid.n - 1))
        ab[1] = (self.stiff_diag - self.hardy_diag - (a + shift_mass) * self.mass)[:-1]
        ab[0, 1:] = (self.stiff_off - self.hardy_off)[:-1]
        return ab

    def apply_interior(self, x: np.ndarray, alpha: float | None = None) -> np.ndarray:
        """``(S - H - alpha M) x`` for a free-node vector ``x``."""
        return self.operator_apply(np.append(x, 0.0), alpha)[:-1]

    def cholesky(self, alpha: float | None = None) -> np.ndarray:
        try:
            return linalg.cholesky_banded(self.banded(alpha), lower=False)
        except linalg.LinAlgError as exc:
            raise DomainError("operator S - H - alpha M is not positive definite") from exc

    @cached_property
    def _hardy_cholesky(self) -> np.ndarray:
        return linalg.cholesky_banded(self.banded(0.0), lower=False)

    def solve(self, rhs: np.ndarray, alpha: float | None = None) -> np.ndarray:
        """Solve ``(S - H - alpha M) x = rhs`` on the free nodes."""
        a = self.alpha if alpha is None else alpha
        cb = self._hardy_cholesky if a == 0.0 else self._cholesky_for(a)
        return linalg.cho_solve_banded((cb, False), rhs)

    def _cholesky_for(self, alpha: float) -> np.ndarray:
        cache = self.__dict__.setdefault("_chol_cache", {})
        if alpha not in cache:
            cache[alpha] = self.cholesky(alpha)
        return cache[alpha]

    @cached_property
    def spectral(self) -> "SpectralResult":
        return first_eigenvalue(self)

    @property
    def lambda1(self) -> float:
        return self.spectral.lambda1

    def with_alpha(self, alpha: float) -> "QuadraticForms":
        if alpha < 0.0:
            raise ParameterError(f"alpha must be >= 0, got {alpha!r}")
        out = QuadraticForms(self.grid, self.stiff_diag, self.stiff_off, self.hardy_diag,
                             self.hardy_off, self.mass, float(alpha))
        # the Hardy part does not depend on alpha; share the expensive pieces
        for key in ("_hardy_cholesky", "spectral"):
            if key in self.__dict__:
                out.__dict__[key] = self.__dict__[key]
        return out

    def check_alpha(self, alpha: float | None = None) -> float:
        a = self.alpha if alpha is None else alpha
        lam = self.lambda1
        if a < 0.0 or a >= lam - ALPHA_MARGIN * lam:
            raise DomainError(
                f"alpha={a!r} must satisfy 0 <= alpha < lambda1={lam:.12g}; "
                "the improved norm is not equivalent to the Hardy norm otherwise"
            )
        return a


def _hardy_matrix(grid: RadialGrid, order: int = 8):
    """Exact-to-round-off Gram matrix of the hat functions against ``2 pi r/(1-r^2)^2``.

    The inner disc (constant extension) is added to the first node and the outer
    tail ``[1 - delta_b, 1]`` (constant extension, lumped) to the last one, matching
    :func:`hardy_integral`'s tail model.
    """
    r = grid.nodes
    a, b = r[:-1, None], r[1:, None]
    h = b - a
    x, w = np.polynomial.legendre.leggauss(order)
    rq = 0.5 * (a + b) + 0.5 * h * x[None, :]
    t = (b - rq) / h
    wq = np.pi * h * w[None, :] * rq / ((1.0 - rq) * (1.0 + rq)) ** 2
    diag = np.zeros(grid.n)
    diag[:-1] += np.sum(wq * t * t, axis=1)
    diag[1:] += np.sum(wq * (1.0 - t) ** 2, axis=1)
    off = np.sum(wq * t * (1.0 - t), axis=1)
    diag[0] += np.pi * r[0] ** 2 / grid.one_minus_r2[0] ** 2
    diag[-1] += np.pi / grid.one_minus_r2[-1]
    return diag, off


def assemble_forms(grid: RadialGrid, alpha: float = 0.0) -> QuadraticForms:
    """Assemble the three forms and check discrete Hardy positivity.

    Raises :class:`AssemblyError` when ``S - H`` fails to be positive definite on
    the free nodes; refining the grid near ``r = 1`` is the usual cure.
    """
    if alpha < 0.0:
        raise ParameterError(f"alpha must be >= 0, got {alpha!r}")
    r, h = grid.nodes, grid.widths
    coef = np.pi * (r[1:] + r[:-1]) / h
    diag = np.zeros(grid.n)
    diag[:-1] += coef
    diag[1:] += coef
    off = -coef
    mass = np.array(grid.weights)
    hdiag, hoff = _hardy_matrix(grid)
    forms = QuadraticForms(grid, diag, off, hdiag, hoff, mass, float(alpha))
    try:
        forms._hardy_cholesky
    except linalg.LinAlgError as exc:
        raise AssemblyError(
            "discrete Hardy inequality violated (stiffness - hardy not positive definite); "
            "refine the grid toward r = 1"
        ) from exc
    return forms


def norm_H_sq(u, forms: QuadraticForms) -> float:
    """``||u||_H^2 = int |grad u|^2 - int u^2/(1-r^2)^2``."""
    return forms.stiffness_form(u) - forms.hardy_form(u)


def norm_1alpha_sq(u, forms: QuadraticForms, alpha: float | None = None) -> float:
    """``||u||_H^2 - alpha ||u||_2^2``; requires ``alpha < lambda1``."""
    a = forms.check_alpha(alpha)
    return norm_H_sq(u, forms) - a * forms.mass_form(u)


def apply_operator(u: RadialFunction, forms: QuadraticForms) -> RadialFunction:
    """Nodal values of ``L_alpha u = -Lap u - u/(1-r^2)^2 - alpha u`` in the weak sense.

    The result ``f`` satisfies ``sum_k M_k f_k v_k = (S - H - alpha M)(u, v)`` for every
    nodal ``v``, with ``M`` the lumped mass.
    """
    vals = forms._vals(u)
    return RadialFunction(forms.grid, forms.operator_apply(vals) / forms.mass, 0.0)


@dataclass(frozen=True, eq=False)
class SpectralResult:
    lambda1: float
    eigenfunction: RadialFunction
    rayleigh_residual: float
    iterations: int = 0
    method: str = "inverse"

    def record(self) -> dict:
        rec = {"lambda1": self.lambda1, "residual": self.rayleigh_residual}
        g = self.eigenfunction.grid
        rec.update({"n": int(g.n), "r_min": g.r_min, "delta_b": g.delta_b, "grading": g.grading})
        return rec

    def to_json(self) -> str:
        return json.dumps(self.record(), sort_keys=True)


def dual_norm(forms: QuadraticForms, res: np.ndarray, alpha: float | None = None) -> float:
    """``sqrt(res^T K^{-1} res)`` with ``K = S - H - alpha M`` on the free nodes.

    This is the norm of the Riesz representer in the energy norm.  The lumped-mass
    dual norm ``sqrt(sum res_k^2 / M_k)`` is useless on geometric meshes: masses
    near ``r_min`` are ~1e-20 and amplify round-off in ``res`` by ~1e10.
    """
    return float(np.sqrt(max(np.dot(res, forms.solve(res, alpha)), 0.0)))


def _rayleigh(forms: QuadraticForms, x: np.ndarray):
    kx = forms.apply_interior(x, 0.0)
    mx = forms.mass[:-1] * x
    lam = float(np.dot(x, kx) / np.dot(x, mx))
    res = kx - lam * mx
    rnorm = dual_norm(forms, res, 0.0) / np.sqrt(np.dot(x, kx))
    return lam, rnorm


def _wrap_eigenfunction(forms: QuadraticForms, x: np.ndarray) -> RadialFunction:
    x = x / np.sqrt(np.dot(x, forms.mass[:-1] * x))
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    return RadialFunction(forms.grid, np.append(x, 0.0), 0.0)


def first_eigenvalue(forms: QuadraticForms, method: str = "inverse", tol: float = 1e-12,
                     max_iter: int = 500) -> SpectralResult:
    """Smallest generalized eigenvalue of ``(S - H, M)`` on the free nodes.

    ``method="inverse"`` runs inverse power iteration with the banded Cholesky
    factor.  ``method="dense"`` is the desk-scale oracle: it forms
    ``M^{1/2} K^{-1} M^{1/2}`` densely and takes its top eigenpair with LAPACK
    (the direct pencil ``(K, M)`` is hopelessly conditioned because the lumped
    masses span ~17 decades on the default mesh).
    """
    if method == "dense":
        ab = forms.banded(0.0)
        k = np.diag(ab[1]) + np.diag(ab[0, 1:], 1) + np.diag(ab[0, 1:], -1)
        sm = np.sqrt(forms.mass[:-1])
        c = sm[:, None] * linalg.inv(k) * sm[None, :]
        w, v = linalg.eigh(0.5 * (c + c.T), subset_by_index=[c.shape[0] - 1, c.shape[0] - 1])
        x = v[:, 0] / sm
        _, rnorm = _rayleigh(forms, x)
        return SpectralResult(float(1.0 / w[0]), _wrap_eigenfunction(forms, x), rnorm, 0, "dense")
    if method != "inverse":
        raise ParameterError(f"unknown eigen method {method!r}")

    m = forms.mass[:-1]
    x = np.ones_like(m)
    lam, rnorm = _rayleigh(forms, x)
    history = []
    prev_change = np.inf
    for it in range(1, max_iter + 1):
        x = forms.solve(m * x, 0.0)
        x /= np.sqrt(np.dot(x, m * x))
        lam_new, rnorm = _rayleigh(forms, x)
        history.append(rnorm)
        change = abs(lam_new - lam)
        lam = lam_new
        if change <= tol * lam and rnorm <= 1e-5:
            break
        # round-off floor: the Rayleigh quotient stopped improving
        if rnorm <= np.sqrt(tol) and change >= prev_change and change <= 1e3 * tol * lam:
            break
        prev_change = change
    else:
        raise SolverError(f"inverse iteration did not converge (residual {rnorm:.3e})",
                          residual=rnorm, trace=history)
    # the eigenvalue converges like the square of the residual: keep iterating
    # while the residual still shrinks geometrically
    for _ in range(max_iter - it):
        y = forms.solve(m * x, 0.0)
        y /= np.sqrt(np.dot(y, m * y))
        lam_y, r_y = _rayleigh(forms, y)
        if r_y > 0.5 * rnorm:
            break
        x, lam, rnorm = y, lam_y, r_y
        it += 1
    if lam <= 0.0:
        raise SolverError(f"nonpositive first eigenvalue {lam}", residual=rnorm)
    return SpectralResult(lam, _wrap_eigenfunction(forms, x), rnorm, it, "inverse")
