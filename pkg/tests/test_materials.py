import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ohmwell.errors import CoercivityError, ConfigurationError, ExtrapolationError, InvalidDomainError
from ohmwell.materials import (
    CurrentSource,
    Matrix3Coefficient,
    OhmLaw,
    build_material_field,
    build_ohm_law,
    check_growth,
    check_hypotheses_pointwise,
    check_monotonicity,
    dissipation_density,
    eval_j,
    random_pairs,
    random_samples,
)

SQRT_HALF = 0.7071067811865476

finite = st.floats(-50, 50, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


# -- material field --------------------------------------------------------

def test_constant_material():
    mat = build_material_field({"kind": "constant", "eps": 1.0, "mu": 1.0}, np.linspace(0, 1, 5))
    assert np.all(mat.eps_values == 1.0) and np.all(mat.mu_values == 1.0)
    assert mat.eps_star == 1.0 and mat.mu_star == 1.0


def test_piecewise_material_is_closed_on_the_left():
    x = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    mat = build_material_field({"kind": "piecewise", "breaks": [0.5], "eps": [1.0, 2.0], "mu": [1.0, 1.0]}, x)
    assert mat.eps_values.tolist() == [1.0, 1.0, 2.0, 2.0, 2.0]
    assert mat.eps_star == 1.0


def test_table_material_interpolates():
    mat = build_material_field({"kind": "table", "x": [0, 1], "eps": [1, 3], "mu": [2, 2]}, [0.0, 0.5, 1.0])
    np.testing.assert_allclose(mat.eps_values, [1.0, 2.0, 3.0])
    assert mat.mu_star == 2.0


def test_negative_permittivity_rejected():
    with pytest.raises(CoercivityError) as info:
        build_material_field({"kind": "piecewise", "breaks": [0.5], "eps": [1.0, -1.0], "mu": [1, 1]},
                             np.linspace(0, 1, 4))
    assert info.value.node is not None


def test_empty_grid_rejected():
    with pytest.raises(InvalidDomainError):
        build_material_field({"kind": "constant"}, [])


def test_material_values_are_read_only():
    mat = build_material_field({"kind": "constant"}, np.linspace(0, 1, 3))
    with pytest.raises(ValueError):
        mat.eps_values[0] = 5.0


# -- pointwise 3x3 hypotheses ----------------------------------------------

def test_identity_matrix_passes():
    rep = check_hypotheses_pointwise(Matrix3Coefficient(np.eye(3)))
    assert rep.passed and rep.symmetry_defect == 0.0
    assert rep.min_eigenvalue == pytest.approx(1.0, abs=1e-14)


def test_diagonal_matrix_smallest_eigenvalue():
    rep = check_hypotheses_pointwise(Matrix3Coefficient(np.diag([2.0, 3.0, 4.0])))
    assert rep.passed and rep.min_eigenvalue == pytest.approx(2.0, abs=1e-14)


def test_asymmetric_matrix_fails_symmetry():
    M = np.eye(3)
    M[0, 1] = 1.0
    rep = check_hypotheses_pointwise(Matrix3Coefficient(M))
    assert rep.symmetry_defect == 1.0
    assert not rep.symmetric_ok and not rep.passed


def test_indefinite_matrix_fails_coercivity():
    rep = check_hypotheses_pointwise(Matrix3Coefficient(np.diag([1.0, -1.0, 1.0])))
    assert rep.symmetric_ok and not rep.coercive_ok


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=9, max_size=9))
def test_min_eigenvalue_bounds_quadratic_form(entries):
    M = np.array(entries).reshape(3, 3)
    rep = check_hypotheses_pointwise(Matrix3Coefficient(M, symmetric=False))
    rng = np.random.default_rng(0)
    xi = rng.standard_normal((200, 3))
    q = np.einsum("ij,jk,ik->i", xi, M, xi)
    assert np.all(q >= rep.min_eigenvalue * np.sum(xi * xi, axis=1) - 1e-9)


# -- Ohm laws ----------------------------------------------------------------

def test_zero_law():
    law = build_ohm_law({"kind": "zero"})
    assert eval_j(law, 0.3, 0.1, [1.0, -2.0, 3.0]).tolist() == [0.0, 0.0, 0.0]
    assert dissipation_density(law, 0.3, 0.1, [1.0, 2.0, 3.0]) == 0.0


def test_linear_law():
    law = build_ohm_law({"kind": "linear", "sigma0": 2.0})
    assert eval_j(law, 0.0, 0.0, [1.0, 0.0, 0.0]).tolist() == [2.0, 0.0, 0.0]
    assert dissipation_density(law, 0.0, 0.0, [1.0, 0.0, 0.0]) == 2.0


def test_saturating_law():
    law = build_ohm_law({"kind": "saturating", "sigma0": 1.0})
    np.testing.assert_allclose(eval_j(law, 0.0, 0.0, [1.0, 0.0, 0.0]), [SQRT_HALF, 0, 0], atol=1e-15)
    assert dissipation_density(law, 0.0, 0.0, [1.0, 0.0, 0.0]) == pytest.approx(SQRT_HALF, abs=1e-15)


def test_source_adds_transverse_current():
    law = build_ohm_law({"kind": "zero", "j0": {"kind": "piecewise", "times": [0.0, 0.5],
                                                 "amplitudes": [2.0, 0.0], "shape": "const"}})
    assert eval_j(law, 0.1, 0.2, [0, 0, 0]).tolist() == [0.0, 2.0, 0.0]
    assert eval_j(law, 0.1, 0.5, [0, 0, 0]).tolist() == [0.0, 0.0, 0.0]


def test_table_law_extrapolation_error():
    law = build_ohm_law({"kind": "table", "table": {"xi": [0, 1, 2], "j": [0, 1, 1.5]}})
    assert law.monotone
    np.testing.assert_allclose(law.j1([1.5, 0.0, 0.0]), [1.25, 0.0, 0.0])
    with pytest.raises(ExtrapolationError):
        law.j1([3.0, 0.0, 0.0])


def test_table_law_must_start_at_origin():
    with pytest.raises(ConfigurationError):
        build_ohm_law({"kind": "table", "table": {"xi": [0.5, 1], "j": [0, 1]}})


def test_table_default_growth_constant():
    law = build_ohm_law({"kind": "table", "table": {"xi": [0, 1, 4], "j": [0, 2, 4]}})
    assert law.c1 == 2.0


def test_unknown_kind_rejected():
    with pytest.raises(ConfigurationError):
        OhmLaw("cubic")


@settings(max_examples=100, deadline=None)
@given(vec3, st.floats(0.0, 10.0))
def test_scalar_and_vector_currents_agree(xi, sigma0):
    for kind in ("linear", "saturating"):
        law = OhmLaw(kind, sigma0)
        e = np.array([xi[1]])
        np.testing.assert_allclose(law.j1(np.array([0.0, xi[1], 0.0]))[1], law.j1_scalar(e)[0],
                                   rtol=1e-14, atol=1e-300)


@settings(max_examples=100, deadline=None)
@given(vec3)
def test_laws_are_odd(xi):
    for law in (OhmLaw("linear", 1.5), OhmLaw("saturating", 2.0)):
        np.testing.assert_array_equal(law.j1(-xi), -law.j1(xi))


# -- sampled growth / monotonicity -------------------------------------------

def test_growth_saturating_passes():
    law = build_ohm_law({"kind": "saturating", "sigma0": 1.0})
    rep = check_growth(law, random_samples(np.random.default_rng(1), 1000, 1.0, 1.0))
    assert rep.passed and rep.max_ratio <= 1.0 and rep.c1 == 1.0


def test_growth_fails_against_small_declared_constant():
    law = build_ohm_law({"kind": "linear", "sigma0": 2.0, "c1": 1.0})
    rep = check_growth(law, random_samples(np.random.default_rng(1), 100, 1.0, 1.0))
    assert not rep.passed and rep.max_ratio == pytest.approx(2.0, rel=1e-14)


def test_growth_with_only_zero_samples():
    law = build_ohm_law({"kind": "linear"})
    rep = check_growth(law, [(0.0, 0.0, np.zeros(3))] * 4)
    assert rep.passed and rep.n_admissible == 0 and rep.message == "no admissible samples"


def test_equal_norm_pair_product():
    law = build_ohm_law({"kind": "saturating", "sigma0": 1.0})
    rep = check_monotonicity(law, [(0.0, 0.0, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))])
    assert rep.min_product == pytest.approx(np.sqrt(2.0), rel=1e-15)


def test_identical_arguments_give_zero_product():
    law = build_ohm_law({"kind": "saturating"})
    xi = np.array([0.3, -1.0, 2.0])
    assert check_monotonicity(law, [(0.0, 0.0, xi, xi)]).min_product == 0.0


def test_negative_table_law_fails_monotonicity():
    law = build_ohm_law({"kind": "table", "table": {"xi": [0, 100], "j": [0, -100]}, "c1": 1.0})
    assert not law.monotone
    rep = check_monotonicity(law, [(0.0, 0.0, np.array([1.0, 0, 0]), np.zeros(3))])
    assert rep.min_product == pytest.approx(-1.0, rel=1e-14) and not rep.passed


@pytest.mark.parametrize("spec", [
    {"kind": "zero"},
    {"kind": "linear", "sigma0": 3.0},
    {"kind": "saturating", "sigma0": 1.0},
    {"kind": "saturating", "sigma0": 7.5},
])
def test_builtins_pass_sampled_hypotheses(spec):
    law = build_ohm_law(spec)
    rng = np.random.default_rng(0)
    assert check_growth(law, random_samples(rng, 10_000, 2.0, 1.0)).passed
    assert check_monotonicity(law, random_pairs(rng, 10_000, 2.0, 1.0)).passed


@settings(max_examples=200, deadline=None)
@given(vec3, vec3, st.floats(0.1, 10.0))
def test_saturating_equal_norm_identity(u, v, sigma0):
    # for |xi| = |eta| = s the product reduces to sigma0 |xi - eta|^2 / sqrt(1 + s^2)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < 1e-6 or nv < 1e-6:
        return
    xi, eta = u, v * (nu / nv)
    law = OhmLaw("saturating", sigma0)
    got = float(np.dot(law.j1(xi) - law.j1(eta), xi - eta))
    expected = sigma0 * float(np.dot(xi - eta, xi - eta)) / np.sqrt(1.0 + nu * nu)
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-12 * sigma0 * nu * nu)


@settings(max_examples=200, deadline=None)
@given(vec3, vec3, st.floats(0.0, 10.0))
def test_builtin_monotonicity_property(xi, eta, sigma0):
    for law in (OhmLaw("linear", sigma0), OhmLaw("saturating", sigma0)):
        assert float(np.dot(law.j1(xi) - law.j1(eta), xi - eta)) >= -1e-12 * (1 + np.dot(xi, xi) + np.dot(eta, eta))


# -- current sources -----------------------------------------------------------

def test_source_norm_over_time():
    src = CurrentSource((0.0, 0.5), (2.0, 0.0), "const", 1.0)
    x = np.linspace(0, 1, 11)
    w = np.full(11, 0.1)
    w[0] = w[-1] = 0.05
    # 4 * 0.5 * int_0^1 1 dx
    assert src.norm_sq_QT(1.0, x, w) == pytest.approx(2.0, rel=1e-14)
    assert src.breakpoints == (0.5,)


def test_source_times_must_start_at_zero():
    with pytest.raises(ConfigurationError):
        CurrentSource((0.1,), (1.0,), "const", 1.0)


def test_saturating_law_at_extreme_magnitudes():
    law = OhmLaw("saturating", 2.0)
    np.testing.assert_allclose(law.j1([1e300, 1e300, 0.0]), [np.sqrt(2.0), np.sqrt(2.0), 0.0], rtol=1e-15)
    np.testing.assert_allclose(law.j1([0.0, 1e-300, 0.0]), [0.0, 2e-300, 0.0], rtol=1e-15)
    np.testing.assert_allclose(law.j1_scalar([1e300, -1e-300]), [2.0, -2e-300], rtol=1e-15)
