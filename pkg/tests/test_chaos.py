from math import comb, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgtumor.chaos import (Projector, RandomSpace, build_basis, build_quadrature, evaluate_ansatz,
                           legendre_orthonormal, multi_indices, order_for_size, project_matrix,
                           project_vector)


def gram(space, order, n_nodes):
    basis = build_basis(space, order)
    quad = build_quadrature(space, n_nodes)
    phi = basis.evaluate(quad.nodes)
    return (phi * quad.weights[:, None]).T @ phi


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("order", [0, 1, 3, 6])
def test_orthonormality(dim, order):
    G = gram(RandomSpace(dim), order, max(order + 1, 2))
    assert np.abs(G - np.eye(G.shape[0])).max() < 1e-12


def test_basis_sizes_and_order():
    assert build_basis(RandomSpace(1), 4).size == 5
    for dim in (1, 2, 3):
        for P in range(6):
            idx = multi_indices(dim, P)
            assert len(idx) == comb(dim + P, dim)
            assert idx[0] == (0,) * dim
            degrees = [sum(k) for k in idx]
            assert degrees == sorted(degrees)
    assert multi_indices(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_invalid_order_and_size():
    with pytest.raises(ValueError):
        build_basis(RandomSpace(1), -1)
    with pytest.raises(ValueError):
        order_for_size(2, 4)
    with pytest.raises(ValueError):
        RandomSpace(0)
    assert order_for_size(2, 15) == 4
    assert order_for_size(1, 4) == 3


def test_basis_values():
    basis = build_basis(RandomSpace(1), 3)
    z = np.linspace(-1, 1, 11)
    assert np.all(basis.evaluate(z)[:, 0] == 1.0)
    assert basis.eval(1, 1.0) == pytest.approx(sqrt(3), abs=1e-15)
    # P2 orthonormal = sqrt(5) (3z^2 - 1) / 2
    assert basis.eval(2, 0.3) == pytest.approx(sqrt(5) * (3 * 0.09 - 1) / 2, abs=1e-14)


def test_legendre_recurrence_against_numpy():
    z = np.linspace(-1, 1, 37)
    vals = legendre_orthonormal(z, 8)
    for p in range(9):
        ref = np.polynomial.legendre.legval(z, np.eye(9)[p]) * np.sqrt(2 * p + 1)
        assert np.allclose(vals[p], ref, atol=1e-13)


def test_quadrature_basics():
    q2 = build_quadrature(RandomSpace(1), 2)
    assert np.sum(q2.weights * q2.nodes[:, 0] ** 2) == pytest.approx(1 / 3, abs=1e-16)
    q16 = build_quadrature(RandomSpace(1), 16)
    assert abs(q16.weights.sum() - 1) < 1e-14
    assert build_quadrature(RandomSpace(2), 10).size == 100
    with pytest.raises(ValueError):
        build_quadrature(RandomSpace(1), 0)


@pytest.mark.parametrize("n", [1, 2, 5, 10, 16])
def test_quadrature_moment_exactness(n):
    q = build_quadrature(RandomSpace(1), n)
    z = q.nodes[:, 0]
    for a in range(2 * n):
        exact = 0.0 if a % 2 else 1.0 / (a + 1)
        assert abs(np.sum(q.weights * z**a) - exact) < 1e-13


def test_tensor_quadrature_moments():
    q = build_quadrature(RandomSpace(2), 4)
    z1, z2 = q.nodes.T
    for a in range(8):
        for b in range(8):
            exact = (0.0 if a % 2 else 1 / (a + 1)) * (0.0 if b % 2 else 1 / (b + 1))
            assert abs(np.sum(q.weights * z1**a * z2**b) - exact) < 1e-13


def test_project_matrix_examples():
    space = RandomSpace(1)
    basis = build_basis(space, 3)
    quad = build_quadrature(space, 16)
    M = project_matrix(basis, quad, lambda z: 2.5)
    assert np.array_equal(M, 2.5 * np.eye(4))
    M = project_matrix(basis, quad, lambda z: z)
    assert M[0, 1] == M[1, 0]
    assert M[0, 1] == pytest.approx(1 / sqrt(3), abs=1e-15)
    M = project_matrix(basis, quad, lambda z: 0.5 * (1 - 0.1 * z))
    assert M[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert np.array_equal(M, M.T)


def test_project_vector_examples():
    space = RandomSpace(1)
    basis = build_basis(space, 4)
    quad = build_quadrature(space, 16)
    assert np.array_equal(project_vector(basis, quad, lambda z: 1.0), np.eye(5)[0])
    c = project_vector(basis, quad, lambda z: z)
    assert c[1] == pytest.approx(1 / sqrt(3), abs=1e-15)
    assert np.abs(np.delete(c, 1)).max() < 1e-14
    assert evaluate_ansatz(c, basis, 0.5) == pytest.approx(0.5, abs=1e-13)
    b2 = build_basis(space, 2)
    c2 = project_vector(b2, quad, lambda z: z**2)
    rec = Projector(b2, quad).reconstruct(c2)
    assert np.abs(rec - quad.nodes[:, 0] ** 2).max() < 1e-13


def test_evaluate_ansatz():
    basis = build_basis(RandomSpace(1), 2)
    assert evaluate_ansatz([1, 0, 0], basis, 0.77) == 1.0
    assert evaluate_ansatz([0, 1, 0], basis, 0.0) == 0.0
    with pytest.raises(ValueError):
        evaluate_ansatz([1, 0], basis, 0.0)


def test_anchored_projection_is_exact_for_constants():
    space = RandomSpace(2)
    proj = Projector(build_basis(space, 3), build_quadrature(space, 5))
    vals = np.full((7, proj.quad.size), 0.3141592653589793)
    M = proj.matrices(vals)
    assert np.array_equal(M, np.broadcast_to(0.3141592653589793 * np.eye(10), M.shape))
    v = proj.vectors(vals)
    assert np.all(v[:, 0] == 0.3141592653589793) and np.all(v[:, 1:] == 0)


@settings(max_examples=40, deadline=None)
@given(dim=st.integers(1, 2), order=st.integers(0, 4), seed=st.integers(0, 2**31 - 1))
def test_projection_round_trip(dim, order, seed):
    rng = np.random.default_rng(seed)
    space = RandomSpace(dim)
    basis = build_basis(space, order)
    quad = build_quadrature(space, order + 2)
    proj = Projector(basis, quad)
    coeffs = rng.normal(size=basis.size)
    values = proj.reconstruct(coeffs)
    assert np.abs(proj.vectors(values) - coeffs).max() < 1e-12


@settings(max_examples=30, deadline=None)
@given(order=st.integers(1, 4), seed=st.integers(0, 2**31 - 1))
def test_matrix_symmetric_and_matches_plain_sum(order, seed):
    rng = np.random.default_rng(seed)
    space = RandomSpace(1)
    proj = Projector(build_basis(space, order), build_quadrature(space, 12))
    vals = rng.normal(size=(3, proj.quad.size))
    M = proj.matrices(vals)
    assert np.array_equal(M, np.swapaxes(M, -1, -2))
    plain = np.einsum("q,nq,qi,qj->nij", proj.quad.weights, vals, proj.phi, proj.phi)
    assert np.abs(M - plain).max() < 1e-13
