"""Orthonormal Legendre chaos on uniform random variables.

Modes are labelled by 0-based graded-lexicographic multi-indices; mode 0 is
the constant polynomial, so ``coeffs[0]`` is always the mean and
``coeffs[1:]`` carry the fluctuation.

Projections are assembled in *anchored* form::

    M_ij = g(z_0) delta_ij + sum_q w_q (g(z_q) - g(z_0)) psi_i(z_q) psi_j(z_q)

which equals the plain quadrature projection in exact arithmetic (the
discrete Gram matrix is the identity) but returns ``g * I`` bit-for-bit when
``g`` does not depend on ``z``.  Deterministic inputs therefore never leak
round-off into the fluctuation modes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class RandomSpace:
    """``dim`` independent uniform variables on [-1, 1] with density 2**-dim."""

    dim: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"random dimension must be >= 1, got {self.dim}")

    @property
    def density(self) -> float:
        return 2.0 ** (-self.dim)


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All ``dim``-tuples of total degree <= ``order`` in graded-lex order.

    Within a degree, tuples are sorted descending lexicographically, e.g.
    ``(1, 0)`` precedes ``(0, 1)``.
    """
    out: list[tuple[int, ...]] = []
    for degree in range(order + 1):
        out.extend(_compositions(degree, dim))
    return out


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    if parts == 1:
        return [(total,)]
    res = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            res.append((first,) + rest)
    return res


@dataclass(frozen=True)
class MultiIndexSet:
    dim: int
    order: int
    indices: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.indices)


def legendre_orthonormal(z, max_degree: int) -> np.ndarray:
    """Orthonormal Legendre values ``sqrt(2p+1) P_p(z)`` for p = 0..max_degree.

    Uses the three-term recurrence on the classical polynomials and scales at
    the end.  Returns an array of shape ``(max_degree + 1,) + z.shape``.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty((max_degree + 1,) + z.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = z
    for p in range(1, max_degree):
        out[p + 1] = ((2 * p + 1) * z * out[p] - p * out[p - 1]) / (p + 1)
    for p in range(1, max_degree + 1):
        out[p] *= np.sqrt(2.0 * p + 1.0)
    return out


@dataclass(frozen=True)
class GpcBasis:
    """Total-degree orthonormal basis of order ``order`` over ``space``."""

    space: RandomSpace
    index_set: MultiIndexSet

    @property
    def size(self) -> int:
        return self.index_set.size

    @property
    def order(self) -> int:
        return self.index_set.order

    @property
    def indices(self):
        return self.index_set.indices

    def evaluate(self, points) -> np.ndarray:
        """Values of every basis function at ``points``.

        ``points`` has shape ``(N, dim)`` (or ``(N,)`` when dim is 1); the
        result has shape ``(N, K)``.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[1] != self.space.dim:
            raise ValueError(
                f"points have dimension {pts.shape[1]}, basis expects {self.space.dim}"
            )
        per_dim = [legendre_orthonormal(pts[:, d], self.order) for d in range(self.space.dim)]
        vals = np.empty((pts.shape[0], self.size))
        for col, k in enumerate(self.indices):
            v = per_dim[0][k[0]].copy()
            for d in range(1, self.space.dim):
                v *= per_dim[d][k[d]]
            vals[:, col] = v
        return vals

    def eval(self, k: int, z) -> float:
        """Value of basis function number ``k`` at the single point ``z``."""
        return float(self.evaluate(np.atleast_2d(np.asarray(z, dtype=float)).reshape(1, -1))[0, k])


def build_basis(space: RandomSpace, order: int) -> GpcBasis:
    """Orthonormal Legendre basis with ``binom(dim + order, dim)`` modes.

    ``order = 0`` is accepted and gives the single constant mode (K = 1),
    which is how the deterministic limit of the SG solver is expressed.
    """
    if order < 0:
        raise ValueError(f"polynomial order must be >= 0, got {order}")
    idx = tuple(multi_indices(space.dim, order))
    assert len(idx) == comb(space.dim + order, space.dim)
    return GpcBasis(space, MultiIndexSet(space.dim, order, idx))


def order_for_size(dim: int, K: int) -> int:
    """Polynomial order P with ``binom(dim + P, dim) == K``."""
    P = 0
    while comb(dim + P, dim) < K:
        P += 1
    if comb(dim + P, dim) != K:
        valid = [comb(dim + p, dim) for p in range(P + 1)]
        raise ValueError(f"K={K} is not a total-degree basis size for dim={dim}; try one of {valid}")
    return P


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Legendre rule whose weights sum to one."""

    nodes: np.ndarray  # (N, dim)
    weights: np.ndarray  # (N,)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]


def default_node_count(order: int) -> int:
    return max(16, 2 * order + 2)


def build_quadrature(space: RandomSpace, n_nodes: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``n_nodes`` points per dimension.

    The 1-D rule comes from :func:`numpy.polynomial.legendre.leggauss` and is
    rescaled to the uniform density.  For ``dim > 1`` nodes and weights are
    tensorised with the last coordinate varying fastest.
    """
    if n_nodes < 1:
        raise ValueError(f"need at least one quadrature node, got {n_nodes}")
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    # leggauss is symmetric only to rounding; enforce it so odd moments cancel
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1]) / 2.0
    grids = np.meshgrid(*([x] * space.dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * space.dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return QuadratureRule(nodes=nodes, weights=weights)


@dataclass(frozen=True)
class Projector:
    """Precomputed basis/quadrature tables shared by all projections.

    ``phi[q, k]`` is psi_k at node q, ``wphi[q, k] = w_q phi[q, k]`` and
    ``pair[q, p]`` holds ``w_q psi_i psi_j`` for the upper-triangle pairs
    ``(i, j) = triu[p]``.
    """

    basis: GpcBasis
    quad: QuadratureRule
    phi: np.ndarray = field(init=False, repr=False)
    wphi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.quad.dim != self.basis.space.dim:
            raise ValueError("quadrature and basis live on different random spaces")
        phi = self.basis.evaluate(self.quad.nodes)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "wphi", self.quad.weights[:, None] * phi)

    @cached_property
    def triu(self) -> tuple[np.ndarray, np.ndarray]:
        return np.triu_indices(self.basis.size)

    @cached_property
    def pair(self) -> np.ndarray:
        i, j = self.triu
        return self.wphi[:, i] * self.phi[:, j]

    def matrices(self, values: np.ndarray) -> np.ndarray:
        """Galerkin matrices for a batch of node samples.

        ``values`` has shape ``(..., Nq)``; returns ``(..., K, K)``.  Each
        matrix is symmetric exactly: only the upper triangle is computed.
        """
        values = np.asarray(values, dtype=float)
        K = self.basis.size
        anchor = values[..., :1]
        upper = (values - anchor) @ self.pair
        out = np.empty(values.shape[:-1] + (K, K))
        i, j = self.triu
        out[..., i, j] = upper
        out[..., j, i] = upper
        diag = np.arange(K)
        out[..., diag, diag] += anchor
        return out

    def vectors(self, values: np.ndarray) -> np.ndarray:
        """Coefficient vectors, shape ``(..., Nq) -> (..., K)``."""
        values = np.asarray(values, dtype=float)
        anchor = values[..., :1]
        out = (values - anchor) @ self.wphi
        out[..., 0] += anchor[..., 0]
        return out

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        """Node values from coefficients, shape ``(..., K) -> (..., Nq)``."""
        return np.asarray(coeffs, dtype=float) @ self.phi.T


def node_args(quad: QuadratureRule):
    """Node coordinates in the calling convention of random functions.

    One-dimensional functions receive an array of nodes; for dim > 1 they
    receive a ``(dim, N)`` array so that ``z[0]``, ``z[1]`` are the
    coordinate arrays.
    """
    return quad.nodes[:, 0] if quad.dim == 1 else quad.nodes.T


def _samples(quad: QuadratureRule, fn: Callable) -> np.ndarray:
    vals = np.asarray(fn(node_args(quad)), dtype=float)
    if vals.shape == (quad.size,):
        return vals
    if vals.shape == ():
        return np.full(quad.size, float(vals))
    raise ValueError(f"random function returned shape {vals.shape}, expected ({quad.size},)")


def project_matrix(basis: GpcBasis, quad: QuadratureRule, g: Callable) -> np.ndarray:
    """K x K Galerkin matrix of the scalar random function ``g``."""
    return Projector(basis, quad).matrices(_samples(quad, g))


def project_vector(basis: GpcBasis, quad: QuadratureRule, f: Callable) -> np.ndarray:
    """gPC coefficients ``<f, psi_k>`` of the scalar random function ``f``."""
    return Projector(basis, quad).vectors(_samples(quad, f))


def evaluate_ansatz(coeffs: Sequence[float], basis: GpcBasis, z) -> float:
    """Reconstruct ``sum_k coeffs[k] psi_k(z)`` at a single point."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (basis.size,):
        raise ValueError(f"expected {basis.size} coefficients, got shape {coeffs.shape}")
    zz = np.asarray(z, dtype=float).reshape(1, -1)
    return float(basis.evaluate(zz)[0] @ coeffs)
