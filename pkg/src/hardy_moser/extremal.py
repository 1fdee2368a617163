"""Subcritical Trudinger-Moser maximizers under the improved Hardy norm.

Maximize ``J(u) = int_B exp(gamma u^2)`` over ``||u||_{1,alpha} <= 1`` for
``gamma < 4 pi``.  The maximizer sits on the sphere and solves

    L_alpha u = u exp(gamma u^2) / lam,    lam = int u^2 exp(gamma u^2),

which is iterated as a damped, normalized fixed point: the Hilbert-sphere
projection is an exact rescaling, and ``L_alpha^{-1}`` is one banded solve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .bubble import BlowupDiagnostics, bubble_value, r_eps, rescale_blowup
from .errors import DomainError, EvaluationError, ParameterError, SolverError
from .forms import QuadraticForms, dual_norm, norm_1alpha_sq
from .radial import RadialFunction, integrate_disc

log = logging.getLogger(__name__)

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 10_000
    theta: float = 0.5
    theta_min: float = 1e-3
    seeds: tuple = ("bubble", "flat")
    certify: bool = True
    n_perturb: int = 50
    perturb_size: float = 1e-3
    rng_seed: int = 20240611


@dataclass(frozen=True, eq=False)
class ExtremalResult:
    u: RadialFunction
    gamma: float
    alpha: float
    lambda_eps: float
    c_eps: float
    J: float
    norm_1alpha: float
    el_residual: float
    iterations: int
    seed: str = ""
    seed_values: dict = field(default_factory=dict)
    certified: Optional[bool] = None

    @property
    def eps(self) -> float:
        return FOUR_PI - self.gamma

    @property
    def r_eps(self) -> float:
        return r_eps(self.lambda_eps, self.c_eps, self.eps)

    def blowup(self, window: float = 5.0, samples: int = 512) -> BlowupDiagnostics:
        return rescale_blowup(self.u, self.c_eps, self.r_eps, window, samples,
                              lambda_eps=self.lambda_eps, eps=self.eps)

    def record(self) -> dict:
        return {
            "gamma": self.gamma,
            "alpha": self.alpha,
            "J": self.J,
            "lambda_eps": self.lambda_eps,
            "c_eps": self.c_eps,
            "norm": self.norm_1alpha,
            "residual": self.el_residual,
            "iters": self.iterations,
        }


def functional_value(u: RadialFunction, gamma: float) -> float:
    """``J(u) = int_B exp(gamma u^2) dx``."""
    return integrate_disc(u.with_values(np.exp(gamma * u.values ** 2), 1.0))


def lambda_of(u: RadialFunction, gamma: float) -> float:
    """``int_B u^2 exp(gamma u^2) dx``; zero exactly when ``u`` vanishes."""
    if gamma < 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma!r}")
    v = u.values
    return integrate_disc(u.with_values(v * v * np.exp(gamma * v * v), 0.0))


def _free(u: RadialFunction, forms: QuadraticForms) -> np.ndarray:
    vals = forms._vals(u)
    return vals[:-1]


def el_residual(u: RadialFunction, lam: float, gamma: float, forms: QuadraticForms) -> float:
    """Dual-norm size of ``L_alpha u - u exp(gamma u^2)/lam`` on the free nodes.

    The dual norm is the energy one, ``sqrt(r^T K^{-1} r)`` (see
    :func:`hardy_moser.forms.dual_norm`); for a normalized ``u`` it equals the
    ``||.||_{1,alpha}`` distance between ``u`` and one undamped fixed-point update.
    """
    if lam <= 0:
        raise ParameterError("lambda must be positive (lambda = 0 signals u = 0)")
    x = _free(u, forms)
    g = x * np.exp(gamma * x * x)
    res = forms.apply_interior(x) - forms.mass[:-1] * g / lam
    return dual_norm(forms, res)


def lambda_from_equation(u: RadialFunction, gamma: float, forms: QuadraticForms) -> float:
    """``lam`` recovered from the equation alone: ``<Mg, L^{-1} Mg> / <Mg, u>``."""
    x = _free(u, forms)
    mg = forms.mass[:-1] * x * np.exp(gamma * x * x)
    return float(np.dot(mg, forms.solve(mg)) / np.dot(mg, x))


def seed_profile(kind: str, forms: QuadraticForms) -> np.ndarray:
    r = forms.grid.nodes
    if kind == "bubble":
        c0, rho, r_glue = 1.0, 0.1, 0.9
        ramp = np.clip((r_glue - r) / r_glue, 0.0, 1.0)
        vals = (c0 + bubble_value(r / rho) / c0) * ramp
    elif kind == "flat":
        vals = (1.0 - r) * (1.0 + r)
    else:
        raise ParameterError(f"unknown seed {kind!r}")
    vals = np.array(vals, dtype=float)
    vals[-1] = 0.0
    return vals


def _energy_norm(forms: QuadraticForms, x: np.ndarray) -> float:
    return float(np.sqrt(np.dot(x, forms.apply_interior(x))))


def _fixed_point(gamma: float, forms: QuadraticForms, x: np.ndarray, opts: SolverOptions):
    m = forms.mass[:-1]
    nrm = _energy_norm(forms, x)
    if not np.any(x) or nrm == 0.0:
        raise SolverError("zero initial profile: lambda = 0 and the update is 0/0")
    x = x / nrm
    theta = opts.theta
    prev = np.inf
    trace = []
    for it in range(1, opts.max_iter + 1):
        g = x * np.exp(gamma * x * x)
        lam = float(np.dot(m, x * g))
        if lam <= 0.0 or not np.isfinite(lam):
            raise SolverError(f"degenerate iterate (lambda={lam})", trace=trace)
        v = forms.solve(m * g / lam)
        d = v - x
        res = float(np.sqrt(max(np.dot(d, forms.apply_interior(d)), 0.0)))
        trace.append(res)
        if res <= opts.tol:
            return x, it, res, trace
        if res > prev:
            theta = max(0.5 * theta, opts.theta_min)
        prev = res
        w = x + theta * d
        x = w / _energy_norm(forms, w)
    raise SolverError(
        f"fixed point did not converge in {opts.max_iter} iterations (residual {res:.3e})",
        residual=res, trace=trace,
    )


def _perturbations(forms: QuadraticForms, count: int, rng: np.random.Generator):
    r = forms.grid.nodes[:-1]
    k = np.arange(1, 7)
    basis = np.cos((k[:, None] - 0.5) * np.pi * r[None, :])
    for _ in range(count):
        a = rng.standard_normal(k.size) / k ** 2
        yield a @ basis


def certify_local_max(res: ExtremalResult, forms: QuadraticForms, opts: SolverOptions) -> bool:
    """No improvement of ``J`` under random smooth perturbations projected to the sphere."""
    rng = np.random.default_rng(opts.rng_seed)
    x = res.u.values[:-1]
    base = res.J
    for xi in _perturbations(forms, opts.n_perturb, rng):
        t = opts.perturb_size / _energy_norm(forms, xi)
        w = x + t * xi
        w = w / _energy_norm(forms, w)
        cand = functional_value(res.u.with_values(np.append(w, 0.0)), res.gamma)
        if cand > base * (1.0 + 1e-10):
            return False
    return True


def _package(x, gamma, alpha, forms, it, seed, trace) -> ExtremalResult:
    u = RadialFunction(forms.grid, np.append(x, 0.0), 0.0)
    lam = lambda_of(u, gamma)
    return ExtremalResult(
        u=u,
        gamma=float(gamma),
        alpha=float(alpha),
        lambda_eps=lam,
        c_eps=float(u.values.max()),  # equals u(0) up to round-off on the flat core
        J=functional_value(u, gamma),
        norm_1alpha=float(np.sqrt(norm_1alpha_sq(u, forms))),
        el_residual=el_residual(u, lam, gamma, forms),
        iterations=it,
        seed=seed,
    )


def maximize_subcritical(
    gamma: float,
    alpha: float,
    forms: QuadraticForms,
    opts: Optional[SolverOptions] = None,
) -> ExtremalResult:
    """Maximizer of ``int exp(gamma u^2)`` on the unit sphere of ``||.||_{1,alpha}``.

    Every seed in ``opts.seeds`` is run to convergence and the larger ``J`` is
    kept; the values reached from each seed are reported in ``seed_values`` so
    that a second branch cannot go unnoticed.
    """
    opts = opts or SolverOptions()
    if gamma >= FOUR_PI:
        raise DomainError(f"gamma={gamma!r} is not subcritical (need gamma < 4 pi)")
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma!r}")
    if forms.alpha != alpha:
        forms = forms.with_alpha(alpha)
    forms.check_alpha()

    best = None
    seed_values = {}
    for seed in opts.seeds:
        x0 = seed_profile(seed, forms)[:-1]
        x, it, _, trace = _fixed_point(gamma, forms, x0, opts)
        cand = _package(x, gamma, alpha, forms, it, seed, trace)
        seed_values[seed] = cand.J
        log.debug("gamma=%.6g alpha=%.6g seed=%s J=%.12g iters=%d", gamma, alpha, seed, cand.J, it)
        if best is None or cand.J > best.J:
            best = cand
    best = _replace(best, seed_values=seed_values)
    if opts.certify:
        best = _replace(best, certified=certify_local_max(best, forms, opts))
    return best


def _replace(res: ExtremalResult, **kw) -> ExtremalResult:
    from dataclasses import replace

    return replace(res, **kw)


def truncation_energy(u: RadialFunction, beta: float, c: float, forms: QuadraticForms) -> float:
    """``||min(u, beta c)||_{1,alpha}^2``."""
    if not (0.0 < beta < 1.0):
        raise ParameterError("beta must lie in (0, 1)")
    if c <= 0:
        raise ParameterError("c must be positive")
    return norm_1alpha_sq(np.minimum(forms._vals(u), beta * c), forms)


def dirac_functional(res: ExtremalResult, phi: Callable = None) -> float:
    """``int phi (c u / lam) exp(gamma u^2) dx``; tends to ``phi(0)`` under concentration."""
    u = res.u
    test = np.ones_like(u.values) if phi is None else np.asarray(phi(u.r), dtype=float) * np.ones_like(u.values)
    dens = test * res.c_eps * u.values * np.exp(res.gamma * u.values ** 2) / res.lambda_eps
    return integrate_disc(u.with_values(dens, 0.0))


def weak_form_gap(u: RadialFunction, forms: QuadraticForms) -> float:
    """``||u||_{1,alpha}^2 - 16 pi log int_B e^u dx`` (bounded below for each alpha)."""
    expo = integrate_disc(u.with_values(np.exp(u.values), np.exp(u.boundary_value)))
    return norm_1alpha_sq(u, forms) - 16.0 * np.pi * np.log(expo)


@dataclass(frozen=True)
class ConcentrationReport:
    entries: list
    flags: dict

    def to_dict(self) -> dict:
        return {"entries": self.entries, "flags": self.flags}


def _strictly(seq: Sequence[float], increasing: bool) -> bool:
    d = np.diff(np.asarray(seq, dtype=float))
    return bool(np.all(d > 0) if increasing else np.all(d < 0))


def concentration_report(
    sweep: Iterable[ExtremalResult],
    phi: Optional[Callable] = None,
    beta: float = 0.5,
    forms: Optional[QuadraticForms] = None,
) -> ConcentrationReport:
    """Finite-gamma diagnostics of the concentration identities along a sweep.

    Per entry: the relative gap between ``J - pi`` and ``lam / c^2``, the Dirac
    functional ``D(phi)`` against ``phi(0)``, the blow-up radius and, when
    ``forms`` is given, the truncation gap ``| ||min(u, beta c)||^2 - beta |``.
    Trend flags are emitted only for sweeps with at least two entries.
    """
    sweep = list(sweep)
    if not sweep:
        raise ParameterError("empty sweep")
    gammas = [s.gamma for s in sweep]
    if any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise ParameterError("sweep must be ordered by increasing gamma")
    phi0 = 1.0 if phi is None else float(np.asarray(phi(np.array([0.0])))[0])
    entries = []
    for s in sweep:
        excess = s.J - np.pi
        ratio = s.lambda_eps / s.c_eps ** 2
        d = dirac_functional(s, phi)
        e = {
            "gamma": s.gamma,
            "alpha": s.alpha,
            "J": s.J,
            "lambda_eps": s.lambda_eps,
            "c_eps": s.c_eps,
            "lambda_over_c2": ratio,
            "concentration_gap": abs(excess - ratio) / excess,
            "dirac": d,
            "dirac_gap": abs(d - phi0),
            "r_eps": s.r_eps,
        }
        if forms is not None:
            fa = forms if forms.alpha == s.alpha else forms.with_alpha(s.alpha)
            e["truncation_gap"] = abs(truncation_energy(s.u, beta, s.c_eps, fa) - beta)
        entries.append(e)
    flags = {}
    if len(entries) >= 2:
        col = lambda k: [e[k] for e in entries]  # noqa: E731
        flags = {
            "J_increasing": _strictly(col("J"), True),
            "c_increasing": _strictly(col("c_eps"), True),
            "concentration_gap_decreasing": _strictly(col("concentration_gap"), False),
            "dirac_gap_decreasing": _strictly(col("dirac_gap"), False),
            "r_eps_decreasing": _strictly(col("r_eps"), False),
            "lambda_bounded_below": bool(min(col("lambda_eps")) > 0.1 * np.pi),
        }
        if forms is not None:
            flags["truncation_gap_decreasing"] = _strictly(col("truncation_gap"), False)
    return ConcentrationReport(entries, flags)
