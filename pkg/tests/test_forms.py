import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardy_moser.errors import AssemblyError, DomainError, EvaluationError, ParameterError
from hardy_moser.forms import (apply_operator, assemble_forms, first_eigenvalue, norm_1alpha_sq,
                               norm_H_sq)
from hardy_moser.radial import RadialFunction, build_grid


def paraboloid(grid):
    vals = 1.0 - grid.nodes ** 2
    vals[-1] = 0.0
    return RadialFunction(grid, vals)


def test_paraboloid_forms(forms):
    u = paraboloid(forms.grid)
    assert forms.stiffness_form(u) == pytest.approx(2 * np.pi, rel=1e-5)
    assert forms.hardy_form(u) == pytest.approx(np.pi, rel=1e-5)
    assert forms.mass_form(u) == pytest.approx(np.pi / 3, rel=1e-5)
    assert norm_H_sq(u, forms) == pytest.approx(np.pi, rel=1e-5)
    assert norm_1alpha_sq(u, forms, 1.0) == pytest.approx(2 * np.pi / 3, abs=1e-4)
    assert norm_H_sq(u.with_values(np.zeros(forms.grid.n)), forms) == 0.0


@given(seed=st.integers(0, 2 ** 31 - 1))
def test_forms_semidefinite_and_hardy_positive(small_forms, seed):
    x = np.random.default_rng(seed).standard_normal(small_forms.grid.n)
    x[-1] = 0.0
    assert small_forms.stiffness_form(x) >= 0
    assert small_forms.hardy_form(x) >= 0
    assert small_forms.mass_form(x) >= 0
    assert norm_H_sq(x, small_forms) > 0


@given(seed=st.integers(0, 2 ** 31 - 1), alpha=st.floats(0, 2.0))
def test_norm_identity(small_forms, seed, alpha):
    x = np.random.default_rng(seed).standard_normal(small_forms.grid.n)
    lhs = norm_1alpha_sq(x, small_forms, alpha) + alpha * small_forms.mass_form(x)
    assert lhs == pytest.approx(norm_H_sq(x, small_forms), rel=1e-12, abs=1e-12)


def test_rayleigh_minimality(forms, lambda1):
    rng = np.random.default_rng(7)
    r = forms.grid.nodes
    for _ in range(100):
        a = rng.standard_normal(6)
        v = sum(ak * np.sin((k + 1) * np.pi * r) for k, ak in enumerate(a)) + rng.standard_normal() * (1 - r)
        v[-1] = 0.0
        assert norm_H_sq(v, forms) / forms.mass_form(v) >= lambda1 * (1 - 1e-12)


def test_eigenvalue_bounds_and_ground_state(forms):
    spec = forms.spectral
    assert 0 < spec.lambda1 <= 3
    u = spec.eigenfunction
    assert np.all(u.values[:-1] > 0)
    assert forms.mass_form(u) == pytest.approx(1.0, rel=1e-12)
    rq = norm_H_sq(u, forms) / forms.mass_form(u)
    assert rq == pytest.approx(spec.lambda1, rel=1e-10)
    assert spec.rayleigh_residual < 1e-5


def test_inverse_matches_dense_oracle(small_forms):
    inv = first_eigenvalue(small_forms, "inverse")
    dense = first_eigenvalue(small_forms, "dense")
    assert abs(inv.lambda1 - dense.lambda1) < 1e-8


def test_two_grid_convergence():
    l2000 = assemble_forms(build_grid(2000)).lambda1
    l4000 = assemble_forms(build_grid(4000)).lambda1
    assert abs(l2000 - l4000) / l4000 < 1e-4


def test_domain_truncation_monotone():
    # a larger truncated domain (smaller delta_b) cannot raise lambda1
    lam = [assemble_forms(build_grid(4000, delta_b=d)).lambda1 for d in (1e-4, 1e-6, 1e-8)]
    assert lam[0] >= lam[1] >= lam[2]


def test_apply_operator_on_ground_state(forms):
    spec = forms.spectral
    u = spec.eigenfunction
    lu = apply_operator(u, forms)
    x = u.values[:-1]
    res = forms.mass[:-1] * (lu.values[:-1] - spec.lambda1 * x)
    from hardy_moser.forms import dual_norm

    assert dual_norm(forms, res) < 1e-5
    assert np.all(apply_operator(u.with_values(np.zeros(forms.grid.n)), forms).values == 0)


def test_apply_operator_weak_identity(small_forms):
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal((2, small_forms.grid.n))
    fa = small_forms.with_alpha(0.7)
    lu = apply_operator(RadialFunction(fa.grid, u), fa)
    lhs = np.dot(fa.mass * lu.values, v)
    rhs = fa.stiffness_form(u, v) - fa.hardy_form(u, v) - 0.7 * fa.mass_form(u, v)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_manufactured_operator():
    # u = 1 - r^2 on a Hardy-free interior check: -Lap u = 4, so L_0 u = 4 - (1 - r^2)^{-1}
    forms = assemble_forms(build_grid(8000))
    r = forms.grid.nodes
    lu = apply_operator(paraboloid(forms.grid), forms).values
    exact = 4.0 - 1.0 / (1.0 - r * r)
    mid = (r > 0.05) & (r < 0.9)
    assert np.max(np.abs(lu[mid] - exact[mid])) < 1e-3


def test_alpha_validation(forms, lambda1):
    u = paraboloid(forms.grid)
    assert norm_1alpha_sq(u, forms, 0.0) == norm_H_sq(u, forms)
    with pytest.raises(DomainError):
        norm_1alpha_sq(u, forms, lambda1)
    with pytest.raises(ParameterError):
        forms.with_alpha(-1.0)


def test_norm_vanishes_near_lambda1(forms, lambda1):
    u = forms.spectral.eigenfunction
    vals = [norm_1alpha_sq(u, forms, lambda1 * (1 - t)) for t in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 1e-5


def test_grid_mismatch(forms, small_forms):
    with pytest.raises(EvaluationError):
        norm_H_sq(RadialFunction(small_forms.grid, np.zeros(200)), forms)


@given(n=st.integers(5, 400), log_db=st.floats(-9, -1), grading=st.floats(0.3, 1.0))
def test_discrete_hardy_inequality_on_random_grids(n, log_db, grading):
    # conforming P1 functions vanish at 1 - delta_b, so exact integration of the
    # Hardy weight can never break positivity: assembly must succeed
    forms = assemble_forms(build_grid(n, 1e-6, 10.0 ** log_db, grading))
    x = np.random.default_rng(n).standard_normal(n)
    x[-1] = 0.0
    assert norm_H_sq(x, forms) > 0


def test_assembly_error_type_is_runtime():
    assert issubclass(AssemblyError, RuntimeError)


def test_spectral_json(small_forms):
    import json

    rec = json.loads(small_forms.spectral.to_json())
    assert set(rec) == {"lambda1", "residual", "n", "r_min", "delta_b", "grading"}
