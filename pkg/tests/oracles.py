"""Independent reference computations shared by the test modules."""
import numpy as np
from scipy import linalg, optimize

from hardy_moser.extremal import functional_value
from hardy_moser.radial import RadialFunction


def eigen_span_maximum(forms, gamma, modes=8, starts=5, seed=0):
    """Max of J over the unit sphere of the span of the first ``modes`` discrete eigenfunctions.

    Nelder-Mead on the coefficient vector (normalized inside the objective),
    restarted from perturbations of the ground state.
    """
    ab = forms.banded()
    k = np.diag(ab[1]) + np.diag(ab[0, 1:], 1) + np.diag(ab[0, 1:], -1)
    m = forms.mass[:-1]
    sm = np.sqrt(m)
    c = sm[:, None] * linalg.inv(k) * sm[None, :]
    w, v = linalg.eigh(0.5 * (c + c.T))
    basis = v[:, np.argsort(w)[::-1][:modes]] / sm[:, None]
    basis /= np.sqrt(np.einsum("ij,ij->j", basis, k @ basis))

    def neg_j(a):
        x = basis @ (a / np.linalg.norm(a))
        return -functional_value(RadialFunction(forms.grid, np.append(x, 0.0)), gamma)

    rng = np.random.default_rng(seed)
    best = np.inf
    for _ in range(starts):
        a0 = np.zeros(modes)
        a0[0] = 1.0
        a0 += 0.1 * rng.standard_normal(modes)
        r = optimize.minimize(neg_j, a0, method="Nelder-Mead",
                              options=dict(xatol=1e-10, fatol=1e-13, maxiter=40000,
                                           maxfev=40000, adaptive=True))
        best = min(best, r.fun)
    return -best
