import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgtumor.chaos import Projector, RandomSpace, build_basis, build_quadrature
from sgtumor.grid import GridSpec
from sgtumor.nutrient import (GrowthClosure, NutrientModel, assemble_nutrient_matrix, c_vitro, c_vivo,
                              concentration, estimate_radius, inside_fraction, vivo_denominator)
from sgtumor.scenarios import make_scenario, sample_initial


def test_model_validation():
    with pytest.raises(ValueError):
        NutrientModel("soil")
    with pytest.raises(ValueError):
        NutrientModel("vivo", c_B=0.0)


def test_vitro_examples():
    assert c_vitro(0.7, 0.7) == pytest.approx(1.0, abs=1e-15)
    # 1 / I0(1)
    assert c_vitro(0.0, 1.0) == pytest.approx(1 / 1.2660658777520082, abs=1e-15)
    assert c_vitro(0.0, 1.0) == pytest.approx(0.7898483148, abs=1e-10)
    assert c_vitro(2.0, 1.0) == 1.0
    assert c_vitro(0.3, 0.0, 2.0) == 2.0


def test_vivo_examples():
    assert c_vivo(0.0, 1.0) == pytest.approx(0.6019072302, abs=1e-10)
    assert c_vivo(0.4, 0.0) == 1.0
    assert c_vivo(200.0, 1.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("R", [0.1, 0.5, 0.7, 1.3, 2.0])
def test_interface_continuity(R):
    eps = 1e-7
    assert abs(c_vitro(R * (1 - 1e-16), R) - c_vitro(R * (1 + 1e-15), R)) < 1e-12
    inside = c_vivo(R, R)
    outside = c_vivo(np.nextafter(R, 2 * R), R)
    assert abs(inside - outside) < 1e-12
    d_in = (c_vivo(R, R) - c_vivo(R - eps, R)) / eps
    d_out = (c_vivo(R + eps, R) - c_vivo(np.nextafter(R, 2 * R), R)) / eps
    assert abs(d_in - d_out) < 1e-6


def test_vivo_against_mpmath():
    R = mpmath.mpf("0.7")
    den = mpmath.besselk(0, R) * mpmath.besseli(1, R) + mpmath.besselk(1, R) * mpmath.besseli(0, R)
    for r in (0.0, 0.3, 0.7, 1.1, 2.5):
        rr = mpmath.mpf(r)
        if r <= 0.7:
            ref = mpmath.besselk(1, R) / den * mpmath.besseli(0, rr)
        else:
            ref = 1 - mpmath.besseli(1, R) / den * mpmath.besselk(0, rr)
        assert c_vivo(r, 0.7) == pytest.approx(float(ref), rel=1e-13)


def test_denominator_identity():
    R = np.linspace(0.1, 2.0, 200)
    assert np.abs(vivo_denominator(R) * R - 1).max() < 1e-10


@settings(max_examples=60, deadline=None)
@given(R=st.floats(0.05, 2.5), r=st.floats(0.0, 5.0), kind=st.sampled_from(["vitro", "vivo"]))
def test_concentration_range(R, r, kind):
    c = c_vitro(r, R) if kind == "vitro" else c_vivo(r, R)
    assert 0 < c <= 1.0 + 1e-15


def test_radius_estimates():
    grid = GridSpec()
    assert estimate_radius(grid.zeros(), grid) == 0.0
    disk = (grid.radius <= 0.7).astype(float)
    R = estimate_radius(disk, grid)
    assert 0.6 <= R <= 0.8
    full = np.ones(grid.shape)
    assert estimate_radius(full, grid) == pytest.approx(2.15 * np.sqrt(2), abs=1e-12)


def test_concentration_grid_matches_pointwise():
    grid = GridSpec(-1.0, 1.0, 20, 20)
    model = NutrientModel("vivo", 1.3)
    c = concentration(np.array([0.0, 0.55]), model, grid)
    assert np.all(c[0] == 1.3)
    ref = np.vectorize(lambda r: c_vivo(r, 0.55, 1.3))(grid.radius)
    assert np.abs(c[1] - ref).max() < 1e-14
    vitro = concentration(np.array([0.55]), NutrientModel("vitro"), grid)[0]
    ref = np.vectorize(lambda r: c_vitro(r, 0.55))(grid.radius)
    assert np.abs(vitro - ref).max() < 1e-14


def test_inside_fraction():
    grid = GridSpec(-1.0, 1.0, 10, 10)
    assert np.array_equal(inside_fraction(grid, 0.5, 1), (grid.radius <= 0.5).astype(float))
    f = inside_fraction(grid, 0.5, 16)
    assert f.min() >= 0 and f.max() <= 1
    # area of the disk recovered from the fractions
    assert f.sum() * grid.cell_area == pytest.approx(np.pi * 0.25, rel=2e-3)


def _frozen_closure(g0=0.45):
    return GrowthClosure(NutrientModel("vivo"), lambda z: g0 + 0.0 * np.asarray(z))


def test_matrix_is_multiple_of_identity_without_randomness():
    grid = GridSpec(-1.0, 1.0, 12, 12)
    space = RandomSpace(1)
    proj = Projector(build_basis(space, 3), build_quadrature(space, 8))
    rho = np.zeros((4,) + grid.shape)
    rho[0] = 0.5 * (grid.radius < 0.5)
    C = assemble_nutrient_matrix(rho, _frozen_closure(), proj, grid)
    R = estimate_radius(rho[0], grid)
    h = 0.45 * concentration(np.array([R]), NutrientModel(), grid)[0]
    assert np.array_equal(C, h[..., None, None] * np.eye(4))


def test_matrix_symmetry_and_bounds():
    sc = make_scenario("testIa")
    grid = sc.grid()
    space = RandomSpace(1)
    proj = Projector(build_basis(space, 3), build_quadrature(space, 16))
    rho = sample_initial(sc, proj, grid)
    C = assemble_nutrient_matrix(rho, sc.closure, proj, grid)
    assert np.array_equal(C, np.swapaxes(C, -1, -2))
    # entries bounded by max |G0| * c_B (and the outside rate 1)
    assert np.abs(C).max() <= max(0.55, 1.0) + 1e-12


def test_origin_entry_k1_against_dense_quadrature():
    # with one mode every node sees the mean density, so R is shared and
    # C_00 at the origin is mean(G0) * c(r0, R)
    sc = make_scenario("testIa")
    grid = sc.grid()
    space = RandomSpace(1)
    proj = Projector(build_basis(space, 0), build_quadrature(space, 16))
    rho = sample_initial(sc, proj, grid)
    C = assemble_nutrient_matrix(rho, sc.closure, proj, grid)
    i0 = grid.column_index(0.0)
    R = estimate_radius(rho[0], grid, sc.closure.delta_rho)
    z200, w200 = np.polynomial.legendre.leggauss(200)
    g0_mean = np.dot(w200 / 2, 0.5 * (1 - 0.1 * z200))
    assert C[i0, i0, 0, 0] == pytest.approx(g0_mean * c_vivo(grid.radius[i0, i0], R), abs=1e-8)


def test_full_matrix_against_node_loop():
    sc = make_scenario("testIa")
    grid = sc.grid()
    space = RandomSpace(1)
    proj = Projector(build_basis(space, 3), build_quadrature(space, 16))
    rho = sample_initial(sc, proj, grid)
    C = assemble_nutrient_matrix(rho, sc.closure, proj, grid)
    ref = np.zeros_like(C)
    for z, w in zip(proj.quad.nodes[:, 0], proj.quad.weights):
        psi = proj.basis.evaluate(np.array([z]))[0]
        rho_z = sum(psi[k] * rho[k] for k in range(4))
        R = estimate_radius(rho_z, grid, sc.closure.delta_rho)
        c = c_vivo(grid.radius, R)
        h = 0.5 * (1 - 0.1 * z) * c
        frac = inside_fraction(grid, 0.7 * (1 + 0.3 * z), sc.numerics.subcells)
        h = frac * h + (1 - frac) * 1.0
        ref += w * h[..., None, None] * np.outer(psi, psi)
    assert np.abs(C - ref).max() < 1e-12
