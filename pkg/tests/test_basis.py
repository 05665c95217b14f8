import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from ohmwell.basis import (
    build_basis,
    build_grid,
    green_residual,
    orthonormality_residual,
    project_initial,
    synthesize,
    weighted_norm,
)
from ohmwell.errors import ConfigurationError, ResolutionError, ShapeError
from ohmwell.materials import build_material_field

from conftest import make_setup

# C[k, l] = k for l = k + 1 (1-based) when eps = mu = 1 and L = pi
C_ANALYTIC_M4 = np.array([
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 2.0, 0.0],
    [0.0, 0.0, 0.0, 3.0],
    [0.0, 0.0, 0.0, 0.0],
])


def test_two_point_rule():
    g = build_grid(1.0, 2, 1)
    np.testing.assert_allclose(g.nodes, [(1 - 1 / np.sqrt(3)) / 2, (1 + 1 / np.sqrt(3)) / 2], rtol=1e-15)
    np.testing.assert_allclose(g.weights, [0.5, 0.5], rtol=1e-15)


def test_weights_sum_to_length():
    assert build_grid(np.pi, 5, 8).weights.sum() == pytest.approx(np.pi, abs=1e-12)


@pytest.mark.parametrize("q, panels", [(1, 4), (17, 4), (4, 0)])
def test_invalid_grid_sizes(q, panels):
    with pytest.raises(ConfigurationError):
        build_grid(1.0, q, panels)


def test_grid_integrates_polynomials_exactly():
    g = build_grid(2.0, 4, 3)
    # 4-point Gauss is exact through degree 7
    assert g.integrate(g.nodes ** 7) == pytest.approx(2.0 ** 8 / 8, rel=1e-14)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_curl_matrix_matches_closed_form(m):
    _, _, _, basis = make_setup(m)
    np.testing.assert_allclose(basis.C, C_ANALYTIC_M4[:m, :m], atol=1e-12)


def _quad_gram(raw, weight, m, L, points=None):
    G = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            G[i, j] = quad(lambda x: weight(x) * raw(i, x) * raw(j, x), 0.0, L,
                           epsabs=1e-13, epsrel=1e-13, limit=200, points=points)[0]
    return G


def test_weighted_modes_match_cholesky_oracle():
    # eps(x) = 1 + x on [0, 1]: orthonormal modes equal inv(chol(G)) @ raw
    m, L = 5, 1.0
    grid = build_grid(L, 8, 10)
    mat = build_material_field({"kind": "table", "x": [0.0, 1.0], "eps": [1.0, 2.0], "mu": [1.0, 1.0]},
                               grid.nodes)
    basis = build_basis(m, grid, mat)
    G = _quad_gram(lambda k, x: np.sin((k + 1) * np.pi * x / L), lambda x: 1.0 + x, m, L)
    R = np.linalg.inv(np.linalg.cholesky(G))
    np.testing.assert_allclose(basis.R_e, R, atol=1e-8)
    x = np.linspace(0.0, L, 37)
    raw = np.sin(np.arange(1, m + 1)[:, None] * np.pi * x / L)
    np.testing.assert_allclose(basis.evaluate(x, "e"), R @ raw, atol=1e-8)


def test_piecewise_curl_matrix_matches_quadrature_oracle():
    m, L = 3, 1.0
    _, _, _, basis = make_setup(m, L, {"kind": "piecewise", "breaks": [0.5], "eps": [1.0, 4.0], "mu": [2.0, 1.0]},
                                panels=8)
    eps = lambda x: 1.0 if x < 0.5 else 4.0
    mu = lambda x: 2.0 if x < 0.5 else 1.0
    e_raw = lambda k, x: np.sin((k + 1) * np.pi * x / L)
    de_raw = lambda k, x: (k + 1) * np.pi / L * np.cos((k + 1) * np.pi * x / L)
    h_raw = lambda k, x: np.cos(k * np.pi * x / L)
    Re = np.linalg.inv(np.linalg.cholesky(_quad_gram(e_raw, eps, m, L, [0.5])))
    Rh = np.linalg.inv(np.linalg.cholesky(_quad_gram(h_raw, mu, m, L, [0.5])))
    raw_C = np.array([[quad(lambda x: de_raw(i, x) * h_raw(j, x), 0, L, epsabs=1e-13)[0]
                       for j in range(m)] for i in range(m)])
    np.testing.assert_allclose(basis.C, Re @ raw_C @ Rh.T, atol=1e-10)


@pytest.mark.parametrize("m", [1, 4, 16, 32])
@pytest.mark.parametrize("material", [
    {"kind": "constant", "eps": 1.0, "mu": 1.0},
    {"kind": "constant", "eps": 2.5, "mu": 0.4},
    {"kind": "piecewise", "breaks": [1.0, 2.0], "eps": [1.0, 50.0, 3.0], "mu": [1.0, 2.0, 1.0]},
    {"kind": "table", "x": [0.0, np.pi], "eps": [1.0, 5.0], "mu": [3.0, 1.0]},
])
def test_orthonormality_and_green_identity(m, material):
    _, _, _, basis = make_setup(m, material=material)
    assert orthonormality_residual(basis) <= 1e-10
    assert green_residual(basis) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 24),
       st.lists(st.floats(0.1, 20.0), min_size=3, max_size=3),
       st.lists(st.floats(0.1, 20.0), min_size=3, max_size=3))
def test_basis_invariants_random_piecewise(m, eps, mu):
    material = {"kind": "piecewise", "breaks": [0.3, 0.7], "eps": eps, "mu": mu}
    _, _, _, basis = make_setup(m, 1.0, material)
    assert orthonormality_residual(basis) <= 1e-10
    assert green_residual(basis) <= 1e-10


def test_electric_modes_vanish_at_ends():
    _, _, _, basis = make_setup(8, material={"kind": "piecewise", "breaks": [1.0], "eps": [1, 3], "mu": [1, 1]})
    ends = basis.evaluate(np.array([0.0, np.pi]), "e")
    assert np.max(np.abs(ends)) <= 1e-12


def test_evaluate_reproduces_node_values():
    _, _, _, basis = make_setup(6, 2.0, {"kind": "constant", "eps": 3.0})
    np.testing.assert_allclose(basis.evaluate(basis.grid.nodes, "e"), basis.phi, atol=1e-14)
    np.testing.assert_allclose(basis.evaluate(basis.grid.nodes, "h", derivative=True), basis.dpsi, atol=1e-13)


def test_singular_gram_matrix_reported():
    grid = build_grid(1.0, 2, 1)
    mat = build_material_field({"kind": "constant"}, grid.nodes)
    with pytest.raises(ResolutionError):
        build_basis(8, grid, mat)


def test_material_on_wrong_grid():
    grid = build_grid(1.0, 4, 2)
    mat = build_material_field({"kind": "constant"}, np.linspace(0, 1, 5))
    with pytest.raises(ShapeError):
        build_basis(2, grid, mat)


# -- projection and synthesis --------------------------------------------------

def test_project_first_mode():
    _, mat, _, basis = make_setup(4)
    a0, b0 = project_initial(basis, mat, basis.phi[0], np.zeros(basis.grid.nodes.size))
    np.testing.assert_allclose(a0, [1, 0, 0, 0], atol=1e-14)
    assert np.all(b0 == 0.0)


def test_project_sine():
    _, mat, _, basis = make_setup(4)
    a0, _ = project_initial(basis, mat, np.sin(basis.grid.nodes), np.zeros(basis.grid.nodes.size))
    np.testing.assert_allclose(a0, [np.sqrt(np.pi / 2), 0, 0, 0], atol=1e-14)


def test_project_shape_mismatch():
    _, mat, _, basis = make_setup(2)
    with pytest.raises(ShapeError):
        project_initial(basis, mat, np.zeros(3), np.zeros(basis.grid.nodes.size))


def test_synthesize_unit_vector_and_zero():
    _, _, _, basis = make_setup(3)
    np.testing.assert_array_equal(synthesize(basis, [1.0, 0.0, 0.0]), basis.phi[0])
    assert np.all(synthesize(basis, np.zeros(3), "h") == 0.0)
    with pytest.raises(ShapeError):
        synthesize(basis, np.zeros(4))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=5, max_size=5))
def test_synthesis_is_isometric(coeffs):
    _, _, _, basis = make_setup(5, 1.0, {"kind": "piecewise", "breaks": [0.4], "eps": [1.0, 6.0], "mu": [2.0, 1.0]})
    c = np.array(coeffs)
    for which in ("e", "h"):
        norm = weighted_norm(basis, synthesize(basis, c, which), which)
        assert norm == pytest.approx(np.linalg.norm(c), rel=1e-10, abs=1e-12)
