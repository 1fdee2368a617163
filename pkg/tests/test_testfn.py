import json

import numpy as np
import pytest

from hardy_moser.errors import ParameterError, ResolutionError
from hardy_moser.forms import assemble_forms
from hardy_moser.green import solve_green, upper_bound
from hardy_moser.radial import build_grid, dirichlet_energy, integrate_disc
from hardy_moser.testfn import (build_test_function, run_test_function, solve_constants,
                                verify_lower_bound)
from hardy_moser.testfn import testfn_grid as grid_for_eps

EPS = (1e-3, 1e-4, 1e-5)


def _setup(eps, alpha, base):
    grid = grid_for_eps(eps, base)
    forms = assemble_forms(grid)
    green = solve_green(alpha, grid, "hardy", forms)
    consts = solve_constants(eps, green.A0, green=green, forms=forms)
    bundle = build_test_function(eps, alpha, green, consts, forms)
    return grid, forms, green, consts, bundle


@pytest.fixture(scope="module")
def base():
    return build_grid()


@pytest.fixture(scope="module")
def bundles(base, lambda1):
    return {(e, a): _setup(e, a, base) for e in EPS for a in (0.0, 0.5 * lambda1)}


def test_asymptotic_constants_example():
    R, c, B = solve_constants(1e-4, 0.0, "asymptotic")
    assert R == pytest.approx(9.21034, abs=1e-5)
    assert 2 * np.pi * c * c == pytest.approx(9.282705, abs=1e-5)
    # the reference decimal 1.215418 has two digits transposed; check it loosely
    assert c == pytest.approx(np.sqrt(9.282705 / (2 * np.pi)), abs=1e-6)
    assert c == pytest.approx(1.215418, abs=1e-4)
    assert B == pytest.approx(0.0795775, abs=1e-7)


def test_constant_validation():
    with pytest.raises(ParameterError):
        solve_constants(0.5, 0.0, "asymptotic")
    with pytest.raises(ParameterError):
        solve_constants(0.0, 0.0, "asymptotic")
    with pytest.raises(ParameterError):
        solve_constants(1e-3, 0.0, "bogus")
    with pytest.raises(ParameterError):
        solve_constants(1e-3, 0.0, "exact")


def test_unresolved_glue_point_raises(grid, forms):
    green = solve_green(0.0, grid, "hardy", forms)
    with pytest.raises(ResolutionError):
        solve_constants(1e-4, green.A0, green=green, forms=forms)


def test_value_at_origin(bundles):
    for (eps, a), (_, _, _, (R, c, B), b) in bundles.items():
        assert b.phi(0.0) == pytest.approx(c + B / c, rel=1e-9)


def test_outer_branch_is_green_over_c(bundles):
    for (eps, a), (grid, _, green, (R, c, B), b) in bundles.items():
        outer = grid.nodes > R * eps * (1 + 1e-12)
        np.testing.assert_allclose(b.phi.values[outer], green.G.values[outer] / c,
                                   rtol=1e-13, atol=1e-15)
        assert b.phi.values[-1] == green.G.values[-1] / c == 0.0


def test_continuity_defect(bundles):
    for (_, _, _, _, b) in bundles.values():
        assert b.continuity_defect <= 1e-8


def test_exact_norm_is_one(bundles):
    for (_, _, _, _, b) in bundles.values():
        assert abs(b.norm_1alpha - 1.0) <= 1e-12


def test_norm_budget_inner_plus_outer(bundles):
    for (eps, a), (grid, _, _, (R, c, B), b) in bundles.items():
        re = R * eps
        phi = b.phi
        r = grid.nodes
        pot = phi.with_values(phi.values ** 2 * (1 / (1 - r ** 2) ** 2 + a), 0.0)
        outer = dirichlet_energy(phi, r_lo=re) - integrate_disc(pot, r_lo=re)
        assert dirichlet_energy(phi, r_hi=re) + outer == pytest.approx(1.0, abs=1e-3)


def test_inner_energy_matches_bubble(bundles):
    for (eps, a), (_, forms, green, _, b) in bundles.items():
        rep = verify_lower_bound(b, forms, green)
        assert abs(rep.inner_energy - rep.inner_energy_model) <= 1.0 / (rep.R ** 2 * rep.c ** 2)


def test_inner_integral_reaches_target(bundles):
    for (eps, a), (_, forms, green, _, b) in bundles.items():
        rep = verify_lower_bound(b, forms, green)
        assert rep.inner_integral >= rep.inner_target * (1 - 5.0 / rep.R ** 2)


def test_margin_positive(bundles):
    for key, (_, forms, green, _, b) in bundles.items():
        rep = verify_lower_bound(b, forms, green)
        assert rep.passed, key
        assert rep.margin > 0
        assert rep.bound == pytest.approx(np.pi + np.pi * np.exp(1 + 4 * np.pi * rep.A0), rel=1e-14)


def test_B_approaches_quarter_pi_inverse(bundles, lambda1):
    for a in (0.0, 0.5 * lambda1):
        gaps = [abs(bundles[(e, a)][3][2] - 1 / (4 * np.pi)) for e in EPS]
        for e, g in zip(EPS, gaps):
            assert g <= 5.0 / np.log(e) ** 2


def test_exact_minus_asymptotic_c_decreases(bundles, lambda1):
    for a in (0.0, 0.5 * lambda1):
        d = []
        for e in EPS:
            green = bundles[(e, a)][2]
            c_exact = bundles[(e, a)][3][1]
            c_asym = solve_constants(e, green.A0, "asymptotic")[1]
            d.append(abs(c_exact - c_asym))
        assert d[0] > d[1] > d[2]


def test_report_json_keys(base):
    rep = run_test_function(1e-4, 0.0, base)
    d = json.loads(rep.to_json())
    for k in ("eps", "R", "c", "B", "A0", "norm", "integral", "bound", "margin", "pass"):
        assert k in d
    assert d["pass"] is True
    assert d["bound"] == pytest.approx(upper_bound(d["A0"]), rel=1e-15)


def test_alpha_mismatch_rejected(bundles):
    (grid, forms, green, consts, _) = bundles[(1e-3, 0.0)]
    with pytest.raises(ParameterError):
        build_test_function(1e-3, 0.5, green, consts, forms)
    with pytest.raises(ParameterError):
        build_test_function(1e-4, 0.0, green, consts, forms)
