import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from hardy_moser.errors import DomainError, ParameterError
from hardy_moser.forms import assemble_forms
from hardy_moser.green import (annulus_dirichlet_energy, capacity_energy, extract_A0, green_l2_sq,
                               log_model_l2_tail,
                               harmonic_annulus, integrated_flux, log_kernel, shooting_A0,
                               solve_green, upper_bound)
from hardy_moser.radial import RadialFunction, build_grid, hardy_integral

# all-geometric mesh: grading close to 1 spends every node on the two log layers
GEOMETRIC = 1.0 - 1e-9


@pytest.fixture(scope="module")
def green0(grid, forms):
    return solve_green(0.0, grid, "hardy", forms)


def test_pure_laplace(grid, forms):
    res = solve_green(0.0, grid, "pure_laplace", forms)
    assert abs(res.A0) < 1e-8
    assert res.flux_defect < 1e-6
    r = grid.nodes
    np.testing.assert_allclose(res.G.values[:-1], -log_kernel(r[:-1]) + log_kernel(r[-1]), atol=1e-12)


def test_hardy_invariants(green0, grid):
    assert green0.flux_defect < 1e-6
    assert green0.G.values[-1] == 0.0
    w = green0.regular_part.values
    assert np.all(np.isfinite(w)) and np.max(np.abs(w)) < 1.0
    a0, err = extract_A0(green0)
    assert a0 == green0.A0 and err < 1e-10


def test_A0_golden_and_ordering(green0, grid, forms, lambda1):
    # regression value on the default grid (n=4000, r_min=1e-10, delta_b=1e-8, grading=0.99)
    assert green0.A0 == pytest.approx(0.1823227631, abs=1e-9)
    half = solve_green(lambda1 / 2, grid, "hardy", forms)
    assert half.A0 == pytest.approx(0.5416348275, abs=1e-9)
    assert half.A0 > green0.A0


@pytest.mark.parametrize("frac", [0.0, 0.5])
def test_A0_against_shooting(frac):
    forms = assemble_forms(build_grid(16000, grading=GEOMETRIC))
    alpha = frac * forms.lambda1
    res = solve_green(alpha, forms.grid, "hardy", forms)
    assert abs(res.A0 - shooting_A0(alpha, forms.grid.delta_b)) < 1e-6


def test_shooting_pure_laplace():
    assert abs(shooting_A0(0.0, 1e-8, mode="pure_laplace")) < 1e-8


def test_A0_grid_stability():
    a = [solve_green(0.0, g, "hardy").A0 for g in (build_grid(2000), build_grid(4000))]
    assert abs(a[0] - a[1]) <= 1e-3


def test_A0_second_order_convergence():
    oracle = shooting_A0(0.0, 1e-8)
    errs = [abs(solve_green(0.0, build_grid(n, grading=GEOMETRIC), "hardy").A0 - oracle)
            for n in (4000, 8000, 16000)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.8)


def test_integrated_flux_identity(green0):
    for r in (1e-6, 0.01, 0.3, 0.7):
        assert integrated_flux(green0, r) == pytest.approx(1.0, abs=5e-3)
    fine = solve_green(0.0, build_grid(16000, grading=GEOMETRIC), "hardy")
    for r in (0.3, 0.7, 0.99):
        assert abs(integrated_flux(fine, r) - 1) < abs(integrated_flux(green0, r) - 1) / 3


def test_alpha_out_of_range(grid, forms, lambda1):
    with pytest.raises(DomainError):
        solve_green(lambda1 * 1.01, grid, "hardy", forms)
    with pytest.raises(ParameterError):
        solve_green(0.0, grid, "neither", forms)


def test_green_integrals_stable(green0):
    fine = solve_green(0.0, build_grid(8000), "hardy")
    assert green_l2_sq(green0) == pytest.approx(green_l2_sq(fine), rel=1e-4)
    h0, h1 = hardy_integral(green0.G), hardy_integral(fine.G)
    assert 0 < h0 < np.inf and h0 == pytest.approx(h1, rel=1e-3)


@pytest.mark.parametrize("rho,a0", [(1e-10, 0.18), (1e-3, 0.0), (0.5, -0.3)])
def test_log_model_tail_closed_form(rho, a0):
    from scipy.integrate import quad

    oracle, _ = quad(lambda t: 2 * np.pi * np.exp(2 * t) * (-t / (2 * np.pi) + a0) ** 2,
                     -200, np.log(rho), epsabs=0, epsrel=1e-13, limit=200)
    assert log_model_l2_tail(rho, a0) == pytest.approx(oracle, rel=1e-11)


def test_outputs(green0, tmp_path):
    green0.write_csv(tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "r,G,w" and len(lines) == green0.grid.n + 1
    rec = json.loads(green0.to_json())
    assert {"alpha", "A0", "A0_error_estimate", "flux_defect", "n"} <= set(rec)


# -- capacity toolkit ---------------------------------------------------------

def test_capacity_examples():
    assert capacity_energy(1.0, 1.0, 0.1, 0.5) == 0.0
    assert capacity_energy(0.0, 1.0, 0.1, 0.1 * np.e) == pytest.approx(2 * np.pi)
    assert capacity_energy(0.0, 2.0, 0.1, 0.3) == pytest.approx(4 * capacity_energy(0.0, 1.0, 0.1, 0.3))
    with pytest.raises(ParameterError):
        capacity_energy(0, 1, 0.5, 0.5)


ANNULI = [(0.0, 1.0, 0.1, 0.1 * np.e), (1.0, -2.0, 1e-6, 0.5), (0.3, 0.7, 0.2, 0.9),
          (-1.0, 1.0, 1e-9, 1e-3), (2.0, 5.0, 0.5, 0.999)]


@pytest.mark.parametrize("a,b,s,r", ANNULI)
def test_harmonic_annulus_energy(grid, a, b, s, r):
    h = harmonic_annulus(a, b, s, r, grid)
    assert h(s) == a and h(r) == b
    assert h(np.sqrt(s * r)) == pytest.approx(0.5 * (a + b), abs=1e-6)
    assert annulus_dirichlet_energy(h, s, r) == pytest.approx(capacity_energy(a, b, s, r), rel=1e-6)


def test_annulus_energy_constant_and_bounds(grid):
    u = RadialFunction(grid, np.full(grid.n, 3.0))
    assert annulus_dirichlet_energy(u, 0.1, 0.5) == 0.0
    with pytest.raises(DomainError):
        harmonic_annulus(0, 1, 1e-12, 0.5, grid)


def test_harmonic_minimizes_under_perturbations(grid):
    a, b, s, r = 0.0, 1.0, 0.05, 0.6
    h = harmonic_annulus(a, b, s, r, grid, max_log_step=5e-3)
    cap = capacity_energy(a, b, s, r)
    base = annulus_dirichlet_energy(h, s, r)
    rng = np.random.default_rng(11)
    x = h.r
    inside = (x > s) & (x < r)
    t = np.log(x[inside] / s) / np.log(r / s)
    for _ in range(100):
        k = np.arange(1, 6)
        xi = (rng.standard_normal(5) / k) @ np.sin(np.pi * np.outer(k, t))
        vals = h.values.copy()
        vals[inside] += 0.1 * xi
        e = annulus_dirichlet_energy(h.with_values(vals), s, r)
        assert e >= base - 1e-12
        assert e >= cap * (1 - 1e-6)


@given(seed=st.integers(0, 10_000))
def test_discrete_minimum_above_capacity(seed):
    # descent from random interior values toward the discrete minimizer never undercuts the capacity
    a, b, s, r = 0.0, 1.0, 0.1, 0.8
    nodes = np.geomspace(s, r, 60)
    c = np.pi * (nodes[1:] + nodes[:-1]) / np.diff(nodes)

    def energy(z):
        u = np.concatenate(([a], z, [b]))
        return float(np.sum(c * np.diff(u) ** 2))

    def grad(z):
        du = np.diff(np.concatenate(([a], z, [b])))
        return 2 * (c[:-1] * du[:-1] - c[1:] * du[1:])

    z0 = np.random.default_rng(seed).uniform(-2, 3, nodes.size - 2)
    res = optimize.minimize(energy, z0, jac=grad, method="L-BFGS-B", options=dict(maxiter=200))
    assert res.fun >= capacity_energy(a, b, s, r) - 1e-10


def test_upper_bound_examples():
    assert upper_bound(0.0) == pytest.approx(np.pi * (1 + np.e))
    assert upper_bound(0.0) == pytest.approx(11.68133, abs=1e-5)
    assert upper_bound(-1 / (4 * np.pi)) == pytest.approx(2 * np.pi)
    assert upper_bound(0.2) > upper_bound(0.1)
