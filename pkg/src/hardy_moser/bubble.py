"""The explicit Liouville bubble and blow-up rescalings of concentrating profiles.

The bubble ``phi(x) = -log(1 + pi |x|^2) / (4 pi)`` solves ``-Lap phi = exp(8 pi phi)``
on the plane with ``phi(0) = 0`` and total mass ``int exp(8 pi phi) = 1``.
Closed forms are used for its mass and Dirichlet energy so they can serve as
oracles for the quadrature rather than consumers of it.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DomainError, ParameterError
from .radial import RadialFunction

FOUR_PI = 4.0 * np.pi
DEFAULT_WINDOW = 5.0
DEFAULT_SAMPLES = 512


def bubble_value(s):
    """``-log(1 + pi s^2) / (4 pi)``; vectorized over ``s >= 0``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ParameterError("bubble radius must be nonnegative")
    out = -np.log1p(np.pi * s * s) / FOUR_PI
    return float(out) if out.ndim == 0 else out


def bubble_slope(s):
    """Radial derivative ``phi'(s) = -s / (2 (1 + pi s^2))``."""
    s = np.asarray(s, dtype=float)
    out = -s / (2.0 * (1.0 + np.pi * s * s))
    return float(out) if out.ndim == 0 else out


def bubble_mass(R: float) -> float:
    """``int_{B_R} exp(8 pi phi) dx = 1 - 1/(1 + pi R^2)``."""
    if R < 0:
        raise ParameterError("R must be nonnegative")
    q = np.pi * R * R
    return float(q / (1.0 + q))


def bubble_dirichlet_energy(R: float) -> float:
    """``int_{B_R} |grad phi|^2 dx = (log(1 + pi R^2) + 1/(1 + pi R^2) - 1) / (4 pi)``."""
    if R < 0:
        raise ParameterError("R must be nonnegative")
    q = np.pi * R * R
    # log1p(q) - q/(1+q) keeps full relative accuracy as R -> 0
    return float((np.log1p(q) - q / (1.0 + q)) / FOUR_PI)


def bubble_energy_asymptote(R: float) -> float:
    """Large-``R`` expansion ``log R/(2 pi) + log pi/(4 pi) - 1/(4 pi)`` (error O(1/R^2))."""
    return float(np.log(R) / (2 * np.pi) + np.log(np.pi) / FOUR_PI - 1.0 / FOUR_PI)


def r_eps(lam: float, c: float, eps: float) -> float:
    """Blow-up radius ``sqrt(lam) / c * exp(-(2 pi - eps/2) c^2)``."""
    if lam <= 0 or c <= 0:
        raise ParameterError(f"need lam > 0 and c > 0, got lam={lam!r}, c={c!r}")
    if not (0.0 <= eps < FOUR_PI):
        raise ParameterError(f"eps must lie in [0, 4 pi), got {eps!r}")
    return float(np.exp(0.5 * np.log(lam) - np.log(c) - (2 * np.pi - 0.5 * eps) * c * c))


@dataclass(frozen=True, eq=False)
class BlowupDiagnostics:
    """Rescaled profiles on the reference window ``s in [0, R_win]``.

    ``rescaled_phi = c (u(r_scale s) - c)`` is compared with the bubble and
    ``rescaled_psi = u(r_scale s) / c`` with the constant 1.
    """

    c_eps: float
    r_eps: float
    s: np.ndarray
    rescaled_phi: np.ndarray
    rescaled_psi: np.ndarray
    lambda_eps: Optional[float] = None
    eps: Optional[float] = None

    @property
    def phi_bubble(self) -> np.ndarray:
        return bubble_value(self.s)

    @property
    def sup_deviation(self) -> float:
        return bubble_deviation(self)

    @property
    def psi_deviation(self) -> float:
        """``sup |psi_eps - 1|`` on the window."""
        return float(np.max(np.abs(self.rescaled_psi - 1.0)))

    @property
    def slope_deviation(self) -> float:
        """Sup-norm gap between difference quotients of ``phi_eps`` and ``phi'``."""
        ds = np.diff(self.s)
        dq = np.diff(self.rescaled_phi - bubble_value(self.s)) / ds
        return float(np.max(np.abs(dq)))

    def summary(self) -> dict:
        return {
            "c_eps": self.c_eps,
            "r_eps": self.r_eps,
            "lambda_eps": self.lambda_eps,
            "eps": self.eps,
            "window": float(self.s[-1]),
            "sup_deviation": self.sup_deviation,
            "psi_deviation": self.psi_deviation,
            "slope_deviation": self.slope_deviation,
        }

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "phi_rescaled", "phi_bubble", "psi_rescaled"])
            for row in zip(self.s, self.rescaled_phi, self.phi_bubble, self.rescaled_psi):
                w.writerow([f"{v:.17g}" for v in row])


def rescale_blowup(
    u: RadialFunction,
    c: float,
    r_scale: float,
    window: float = DEFAULT_WINDOW,
    samples: int = DEFAULT_SAMPLES,
    lambda_eps: Optional[float] = None,
    eps: Optional[float] = None,
) -> BlowupDiagnostics:
    """Sample ``psi(s) = u(r_scale s)/c`` and ``phi(s) = c (u(r_scale s) - c)`` on ``[0, window]``."""
    if c <= 0 or r_scale <= 0:
        raise ParameterError("c and r_scale must be positive")
    if r_scale * window > u.grid.r_max:
        raise DomainError(
            f"window radius {r_scale * window:.3e} exceeds the grid (r_max={u.grid.r_max})"
        )
    s = np.linspace(0.0, window, samples)
    vals = u(r_scale * s)
    return BlowupDiagnostics(
        c_eps=float(c),
        r_eps=float(r_scale),
        s=s,
        rescaled_phi=c * (vals - c),
        rescaled_psi=vals / c,
        lambda_eps=lambda_eps,
        eps=eps,
    )


def bubble_deviation(d: BlowupDiagnostics) -> float:
    """``sup_window |phi_eps - phi|``."""
    return float(np.max(np.abs(d.rescaled_phi - bubble_value(d.s))))
