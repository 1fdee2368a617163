"""Radial meshes, nodal radial functions and disc quadrature.

Every integral over the unit disc B reduces to ``2*pi * int f(r) r dr``.  The
radial interval is truncated to ``[r_min, 1 - delta_b]``; the two tails are
closed with a local model (``f`` frozen at the endpoint value), which makes the
rule exact for constants and, for functions vanishing at the outer node, drops
the outer tail entirely.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, logit

from .errors import EvaluationError, ParameterError, SingularDomainError

TWO_PI = 2.0 * np.pi

DEFAULT_N = 4000
DEFAULT_R_MIN = 1e-10
DEFAULT_DELTA_B = 1e-8
DEFAULT_GRADING = 0.99


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing radii ``r_min = r_0 < ... < r_{n-1} = 1 - delta_b``.

    ``grading`` is the nominal ratio of neighbouring cell widths inside the
    boundary layers (1.0 means uniform spacing); ``kind`` records how the nodes
    were produced so that results can carry their provenance.
    """

    nodes: np.ndarray
    r_min: float
    delta_b: float
    grading: float = 1.0
    kind: str = "uniform"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ParameterError("a radial grid needs at least 3 nodes")
        if not np.all(np.isfinite(nodes)):
            raise ParameterError("grid nodes must be finite")
        if np.any(np.diff(nodes) <= 0.0):
            raise ParameterError("grid nodes must be strictly increasing")
        if nodes[0] <= 0.0:
            raise ParameterError("grid must stay away from the origin (r_0 > 0)")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @cached_property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @cached_property
    def weights(self) -> np.ndarray:
        """Nodal weights ``W_k`` with ``sum W_k f_k ~ int_B f dx`` (trapezoid + tails)."""
        r, h = self.nodes, self.widths
        w = np.zeros_like(r)
        w[:-1] += np.pi * r[:-1] * h
        w[1:] += np.pi * r[1:] * h
        w[0] += np.pi * r[0] ** 2
        w[-1] += np.pi * (1.0 - r[-1]) * (1.0 + r[-1])
        w.setflags(write=False)
        return w

    @cached_property
    def one_minus_r2(self) -> np.ndarray:
        r = self.nodes
        return (1.0 - r) * (1.0 + r)

    def provenance(self) -> dict:
        return {
            "n": int(self.n),
            "r_min": float(self.r_min),
            "delta_b": float(self.delta_b),
            "grading": float(self.grading),
            "kind": self.kind,
        }

    def index_of(self, r: float) -> int:
        """Index of the node nearest to ``r``."""
        return int(np.argmin(np.abs(self.nodes - r)))

    def has_node(self, r: float, rtol: float = 1e-12) -> bool:
        k = self.index_of(r)
        return abs(self.nodes[k] - r) <= rtol * max(abs(r), 1e-300)

    def with_nodes(self, points) -> "RadialGrid":
        """Union of this grid with extra radii inside ``(r_min, 1 - delta_b)``."""
        pts = np.asarray(points, dtype=float).ravel()
        pts = pts[(pts > self.nodes[0]) & (pts < self.nodes[-1])]
        merged = np.union1d(self.nodes, pts)
        # drop near-duplicates that would create degenerate cells
        keep = np.concatenate(([True], np.diff(merged) > 1e-14 * merged[1:]))
        keep[-1] = True
        merged = merged[keep]
        if merged[-2] >= merged[-1]:
            merged = np.delete(merged, -2)
        return RadialGrid(merged, self.r_min, self.delta_b, self.grading, kind="composite")


def build_grid(
    n: int = DEFAULT_N,
    r_min: float = DEFAULT_R_MIN,
    delta_b: float = DEFAULT_DELTA_B,
    grading: float = DEFAULT_GRADING,
) -> RadialGrid:
    """Graded mesh on ``[r_min, 1 - delta_b]``.

    ``grading == 1`` gives uniform nodes.  Otherwise the nodes equidistribute the
    density ``1/H + 1/(k r) + 1/(k (1 - r))`` with ``k = 1 - grading``: geometric
    layers (neighbour ratio ~ ``grading``) at both ends and a uniform core of
    width ``H`` fixed by the node budget.  When ``n`` is too small to afford
    ratio ``grading`` the layers are coarsened and the core disappears.
    """
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise ParameterError(f"n must be an integer >= 3, got {n!r}")
    if not (0.0 < delta_b < 1.0):
        raise ParameterError(f"delta_b must lie in (0, 1), got {delta_b!r}")
    r_max = 1.0 - delta_b
    if not (0.0 < r_min < r_max):
        raise ParameterError(f"need 0 < r_min < 1 - delta_b, got r_min={r_min!r}")
    if not (0.0 < grading <= 1.0):
        raise ParameterError(f"grading ratio must lie in (0, 1], got {grading!r}")

    if grading == 1.0:
        nodes = np.linspace(r_min, r_max, n)
        nodes[-1] = r_max
        return RadialGrid(nodes, r_min, delta_b, 1.0, kind="uniform")

    cells = n - 1
    kappa = 1.0 - grading
    span_log = np.log(r_max / r_min) + np.log1p(-r_min) - np.log(delta_b)
    if span_log / kappa >= cells:
        kappa = span_log / cells
        inv_h = 0.0
    else:
        inv_h = (cells - span_log / kappa) / (r_max - r_min)

    def phi(t):
        r = expit(t)
        return (r - r_min) * inv_h + (np.log(r / r_min) + np.log1p(-r_min) - np.log(expit(-t))) / kappa

    lo = np.full(n - 2, logit(r_min))
    hi = np.full(n - 2, np.log(r_max) - np.log(delta_b))
    target = np.arange(1, n - 1, dtype=float)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = phi(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < 1e-14:
            break
    inner = expit(0.5 * (lo + hi))
    nodes = np.concatenate(([r_min], inner, [r_max]))
    return RadialGrid(nodes, r_min, delta_b, float(grading), kind="graded")


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Nodal values of a radial profile ``u(r)`` on a grid.

    ``boundary_value`` is the value at ``r = 1``; members of the Hardy space carry 0.
    """

    grid: RadialGrid
    values: np.ndarray
    boundary_value: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.nodes.shape:
            raise EvaluationError(
                f"values have shape {vals.shape}, grid has {self.grid.nodes.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: RadialGrid, f: Callable, boundary_value: float = 0.0):
        return cls(grid, np.asarray(f(grid.nodes), dtype=float) * np.ones(grid.n), boundary_value)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __call__(self, r):
        """Piecewise-linear evaluation; constant on ``[0, r_min]``, linear to ``boundary_value`` at 1."""
        x = np.concatenate((self.grid.nodes, [1.0]))
        y = np.concatenate((self.values, [self.boundary_value]))
        return np.interp(r, x, y)

    def with_values(self, values, boundary_value: Optional[float] = None) -> "RadialFunction":
        bv = self.boundary_value if boundary_value is None else boundary_value
        return RadialFunction(self.grid, values, bv)

    def __mul__(self, s: float) -> "RadialFunction":
        return RadialFunction(self.grid, self.values * s, self.boundary_value * s)

    __rmul__ = __mul__

    def __add__(self, other) -> "RadialFunction":
        if isinstance(other, RadialFunction):
            _check_same_grid(self, other)
            return RadialFunction(self.grid, self.values + other.values,
                                  self.boundary_value + other.boundary_value)
        return RadialFunction(self.grid, self.values + other, self.boundary_value + other)


def _check_same_grid(u: RadialFunction, v: RadialFunction):
    if u.grid is not v.grid and not np.array_equal(u.grid.nodes, v.grid.nodes):
        raise EvaluationError("radial functions live on different grids")


def _finite_values(f: RadialFunction) -> np.ndarray:
    if not f.is_finite():
        raise EvaluationError("non-finite nodal values")
    return f.values


def _node_range(grid: RadialGrid, r_lo, r_hi):
    i0 = 0 if r_lo is None else grid.index_of(r_lo)
    i1 = grid.n - 1 if r_hi is None else grid.index_of(r_hi)
    if i1 <= i0:
        raise EvaluationError(f"empty integration range [{r_lo}, {r_hi}] on this grid")
    return i0, i1


def integrate_disc(
    f: RadialFunction,
    r_lo: Optional[float] = None,
    r_hi: Optional[float] = None,
    extrapolate: bool = False,
) -> float:
    """``int_B f dx`` by the trapezoid rule on ``2 pi f(r) r``.

    With no bounds the inner tail ``[0, r_min]`` and outer tail ``[1 - delta_b, 1]``
    are added with ``f`` frozen at the end nodes.  ``r_lo``/``r_hi`` restrict to an
    annulus between the nearest nodes (tails are then omitted, except that a
    missing ``r_lo`` still includes the inner disc).  ``extrapolate`` applies one
    Richardson step against the every-other-node subgrid (needs an even cell count).
    """
    vals = _finite_values(f)
    grid = f.grid
    if r_lo is None and r_hi is None and not extrapolate:
        return float(np.dot(grid.weights, vals))

    i0, i1 = _node_range(grid, r_lo, r_hi)
    r = grid.nodes[i0:i1 + 1]
    g = TWO_PI * vals[i0:i1 + 1] * r

    def trap(rr, gg):
        return float(np.sum(0.5 * (gg[1:] + gg[:-1]) * np.diff(rr)))

    tails = 0.0
    if r_lo is None:
        tails += np.pi * grid.nodes[0] ** 2 * vals[0]
    if r_hi is None:
        tails += np.pi * grid.one_minus_r2[-1] * vals[-1]

    fine = trap(r, g)
    if not extrapolate:
        return fine + tails
    if (r.size - 1) % 2:
        raise EvaluationError("Richardson extrapolation needs an even number of cells")
    coarse = trap(r[::2], g[::2])
    return fine + (fine - coarse) / 3.0 + tails


def derivative(u: RadialFunction) -> np.ndarray:
    """``u'(r)`` at the nodes: centred differences inside, one-sided at the ends."""
    return np.gradient(_finite_values(u), u.grid.nodes)


def dirichlet_energy(u: RadialFunction, r_lo: Optional[float] = None,
                     r_hi: Optional[float] = None) -> float:
    """``int |grad u|^2 dx`` for the piecewise-linear interpolant (exact cell integrals)."""
    vals = _finite_values(u)
    i0, i1 = _node_range(u.grid, r_lo, r_hi)
    r = u.grid.nodes[i0:i1 + 1]
    du = np.diff(vals[i0:i1 + 1])
    h = np.diff(r)
    return float(np.pi * np.sum(du * du * (r[1:] + r[:-1]) / h))


def hardy_integral(u: RadialFunction) -> float:
    """``int u^2 / (1 - |x|^2)^2 dx``."""
    grid = u.grid
    if grid.nodes[-1] >= 1.0 or grid.delta_b <= 0.0:
        raise SingularDomainError("the Hardy weight is singular at r = 1; need delta_b > 0")
    vals = _finite_values(u)
    return float(np.dot(grid.weights, vals * vals / grid.one_minus_r2 ** 2))


def l2_norm_sq(u: RadialFunction) -> float:
    """``int u^2 dx``."""
    vals = _finite_values(u)
    return float(np.dot(u.grid.weights, vals * vals))


def write_csv(u: RadialFunction, path) -> None:
    """Serialize as ``r,value`` rows with 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "value"])
        for r, v in zip(u.grid.nodes, u.values):
            w.writerow([f"{r:.17g}", f"{v:.17g}"])


def read_csv(path, r_min: Optional[float] = None, delta_b: Optional[float] = None,
             boundary_value: float = 0.0) -> RadialFunction:
    """Inverse of :func:`write_csv`; cutoffs default to the first node and ``1 - last node``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    nodes, vals = data[:, 0], data[:, 1]
    grid = RadialGrid(
        nodes,
        float(nodes[0]) if r_min is None else r_min,
        float(1.0 - nodes[-1]) if delta_b is None else delta_b,
        kind="file",
    )
    return RadialFunction(grid, vals, boundary_value)
