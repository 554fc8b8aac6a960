"""Prediction-correction finite-volume step for one density field.

One step advances ``(rho, u, v)`` by ``dt``:

1. velocity prediction: the semi-implicit velocity equation
   ``du/dt = m grad[rho^(m-2) (div(rho u) - S)]`` is discretised with
   ``rho`` frozen at the old level and ``u*`` implicit, and the coupled
   sparse system for ``(u*, v*)`` is solved;
2. density update: conservative upwind fluxes built from a piecewise-linear
   reconstruction of ``rho`` and face-averaged ``u*``, plus ``dt * S``;
3. velocity correction back onto Darcy's law ``u = -grad p(rho)`` with
   ``p = m/(m-1) rho^(m-1)`` (or an exact relaxation towards it).

``S`` is the growth source evaluated at the old level.  For a single
species ``S = g * rho``; the stochastic Galerkin driver hands in the
gPC-coupled source of each mode.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .grid import GridSpec

log = logging.getLogger(__name__)

LIMITERS = ("none", "minmod")
SOLVERS = ("direct", "jacobi")
BOUNDARIES = ("noflux", "periodic")


class StepError(RuntimeError):
    """A time step produced an unusable state (solver failure, NaN, ...)."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class StepParams:
    """Numerical parameters of one kernel step.

    ``epsilon=None`` applies the hard Darcy correction; a value in (0, 1]
    relaxes the velocity towards Darcy's law at rate ``1/epsilon**2`` over
    the step instead.  ``limiter="none"`` uses the raw forward-difference
    slopes in the reconstruction, ``"minmod"`` limits them against the
    backward difference (and keeps the scheme mirror symmetric).
    """

    m: float = 80.0
    dt: float = 1e-3
    epsilon: float | None = None
    limiter: str = "minmod"
    solver: str = "direct"
    tol: float = 1e-10
    maxiter: int = 500
    boundary: str = "noflux"
    cfl_warn: float = 0.5

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"pressure exponent m must be >= 2, got {self.m}")
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if self.epsilon is not None and not 0 < self.epsilon <= 1:
            raise ValueError(f"relaxation constant must lie in (0, 1], got {self.epsilon}")
        if self.limiter not in LIMITERS:
            raise ValueError(f"unknown limiter {self.limiter!r}; choose from {LIMITERS}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}; choose from {BOUNDARIES}")

    def with_(self, **kw) -> "StepParams":
        return replace(self, **kw)


def clip_density(rho: np.ndarray) -> np.ndarray:
    """Negative values (round-off, or signed gPC modes) set to zero."""
    return np.maximum(rho, 0.0)


# --------------------------------------------------------------------------
# neighbour helpers: ghost cells mirror the boundary cell (zero gradient)
# --------------------------------------------------------------------------

def _shift(f: np.ndarray, offset: int, axis: int, periodic: bool) -> np.ndarray:
    """``g[i] = f[i + offset]`` along ``axis`` with edge or periodic ghosts."""
    if periodic:
        return np.roll(f, -offset, axis=axis)
    n = f.shape[axis]
    idx = np.clip(np.arange(n) + offset, 0, n - 1)
    return np.take(f, idx, axis=axis)


def _neighbour_index(n: int, offset: int, periodic: bool) -> np.ndarray:
    idx = np.arange(n) + offset
    return idx % n if periodic else np.clip(idx, 0, n - 1)


# --------------------------------------------------------------------------
# velocity prediction
# --------------------------------------------------------------------------

def prediction_system(rho, source, params: StepParams, grid: GridSpec):
    """Sparse operator ``M`` and source gradient of the velocity prediction.

    The prediction reads ``(I + M) X = X_old - dt * grad_growth`` with
    ``X = [u.ravel(), v.ravel()]``.  Every column of ``M`` that belongs to a
    cell is scaled by that cell's density, so vacuum columns are empty.

    Returns ``(M, grad_growth)`` with ``grad_growth`` of length ``2 N``.
    """
    nx, ny = grid.shape
    N = nx * ny
    m = params.m
    periodic = params.boundary == "periodic"
    c = clip_density(np.asarray(rho, dtype=float))
    b = c ** (m - 2)
    growth = b * source

    kx = params.dt * m / grid.dx**2
    ky = params.dt * m / grid.dy**2
    kxy = params.dt * m / (4.0 * grid.dx * grid.dy)

    cid = np.arange(N).reshape(nx, ny)
    ip = _neighbour_index(nx, 1, periodic)
    im = _neighbour_index(nx, -1, periodic)
    jp = _neighbour_index(ny, 1, periodic)
    jm = _neighbour_index(ny, -1, periodic)

    # face coefficients (rho at the face)^(m-2); boundary faces carry no flux
    ax_p = (0.5 * (c + c[ip, :])) ** (m - 2)
    ax_m = (0.5 * (c + c[im, :])) ** (m - 2)
    ay_p = (0.5 * (c + c[:, jp])) ** (m - 2)
    ay_m = (0.5 * (c + c[:, jm])) ** (m - 2)
    if not periodic:
        ax_p[-1, :] = 0.0
        ax_m[0, :] = 0.0
        ay_p[:, -1] = 0.0
        ay_m[:, 0] = 0.0

    rows, cols, vals = [], [], []

    def add(r, cidx, v):
        rows.append(r.ravel())
        cols.append(cidx.ravel())
        vals.append(v.ravel())

    I2 = slice(None)
    # u rows: second difference of (rho u) in x
    add(cid, cid, kx * (ax_p + ax_m) * c)
    add(cid, cid[ip, I2], -kx * ax_p * c[ip, :])
    add(cid, cid[im, I2], -kx * ax_m * c[im, :])
    # u rows: cross derivative d/dx [rho^(m-2) d/dy (rho v)]
    bxp = b[ip, :]
    bxm = b[im, :]
    add(cid, N + cid[ip][:, jp], -kxy * bxp * c[ip][:, jp])
    add(cid, N + cid[ip][:, jm], kxy * bxp * c[ip][:, jm])
    add(cid, N + cid[im][:, jp], kxy * bxm * c[im][:, jp])
    add(cid, N + cid[im][:, jm], -kxy * bxm * c[im][:, jm])
    # v rows: second difference of (rho v) in y
    add(N + cid, N + cid, ky * (ay_p + ay_m) * c)
    add(N + cid, N + cid[:, jp], -ky * ay_p * c[:, jp])
    add(N + cid, N + cid[:, jm], -ky * ay_m * c[:, jm])
    # v rows: cross derivative d/dy [rho^(m-2) d/dx (rho u)]
    byp = b[:, jp]
    bym = b[:, jm]
    add(N + cid, cid[ip][:, jp], -kxy * byp * c[ip][:, jp])
    add(N + cid, cid[im][:, jp], kxy * byp * c[im][:, jp])
    add(N + cid, cid[ip][:, jm], kxy * bym * c[ip][:, jm])
    add(N + cid, cid[im][:, jm], -kxy * bym * c[im][:, jm])

    r = np.concatenate(rows)
    cc = np.concatenate(cols)
    v = np.concatenate(vals)
    keep = v != 0.0
    M = sps.csr_matrix((v[keep], (r[keep], cc[keep])), shape=(2 * N, 2 * N))

    gx = params.dt * m / (2.0 * grid.dx) * (_shift(growth, 1, 0, periodic) - _shift(growth, -1, 0, periodic))
    gy = params.dt * m / (2.0 * grid.dy) * (_shift(growth, 1, 1, periodic) - _shift(growth, -1, 1, periodic))
    return M, np.concatenate([gx.ravel(), gy.ravel()])


def _solve_active(A: sps.csr_matrix, rhs: np.ndarray, params: StepParams) -> np.ndarray:
    if params.solver == "direct":
        x = spla.spsolve(A.tocsc(), rhs)
        return np.atleast_1d(x)
    # damped Jacobi, fixed sweep order (vectorised, so order-independent)
    diag = A.diagonal()
    x = rhs / diag
    norm = max(np.linalg.norm(rhs), 1e-300)
    omega = 0.8
    for _ in range(params.maxiter):
        res = rhs - A @ x
        if np.linalg.norm(res) <= params.tol * norm:
            return x
        x = x + omega * res / diag
    res = np.linalg.norm(rhs - A @ x) / norm
    raise StepError(f"Jacobi prediction solve did not converge in {params.maxiter} sweeps", res)


def predict_velocity(rho, u, v, source, params: StepParams, grid: GridSpec):
    """Solve the semi-implicit velocity prediction; returns ``(u*, v*)``.

    Unknowns sitting in vacuum cells decouple exactly (their columns are
    empty), so only the block of cells with positive density is solved and
    the vacuum rows are recovered by substitution.
    """
    N = grid.nx * grid.ny
    M, grad_growth = prediction_system(rho, source, params, grid)
    rhs = np.concatenate([np.asarray(u, float).ravel(), np.asarray(v, float).ravel()]) - grad_growth
    occupied = clip_density(np.asarray(rho, float)).ravel() > 0
    active = np.concatenate([occupied, occupied])
    x = rhs.copy()
    if active.any():
        idx = np.flatnonzero(active)
        A = (sps.identity(idx.size, format="csr") + M[idx][:, idx]).tocsr()
        xa = _solve_active(A, rhs[idx], params)
        res = np.linalg.norm(A @ xa - rhs[idx]) / max(np.linalg.norm(rhs[idx]), 1e-300)
        if not np.isfinite(res) or res > params.tol:
            raise StepError(f"velocity prediction residual {res:.3e} exceeds {params.tol:.1e}", res)
        x[idx] = xa
        rest = np.flatnonzero(~active)
        if rest.size:
            x[rest] = rhs[rest] - M[rest][:, idx] @ xa
    return x[:N].reshape(grid.shape), x[N:].reshape(grid.shape)


# --------------------------------------------------------------------------
# density update
# --------------------------------------------------------------------------

def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _slopes(rho, h, axis, params: StepParams):
    periodic = params.boundary == "periodic"
    fwd = (_shift(rho, 1, axis, periodic) - rho) / h
    if params.limiter == "none":
        return fwd
    bwd = (rho - _shift(rho, -1, axis, periodic)) / h
    return _minmod(fwd, bwd)


def _face_flux(rho, vel, h, axis, params: StepParams):
    """Fluxes on the ``n + 1`` faces normal to ``axis`` (index k = face k-1/2)."""
    periodic = params.boundary == "periodic"
    s = _slopes(rho, h, axis, params)
    rho_next = _shift(rho, 1, axis, periodic)
    s_next = _shift(s, 1, axis, periodic)
    vel_next = _shift(vel, 1, axis, periodic)
    rl = rho + 0.5 * h * s
    rr = rho_next - 0.5 * h * s_next
    uf = 0.5 * (vel + vel_next)
    f = 0.5 * (rl * uf + rr * uf - np.abs(uf) * (rr - rl))  # face i+1/2 at slot i
    n = rho.shape[axis]
    shape = list(rho.shape)
    shape[axis] = n + 1
    out = np.zeros(shape)
    inner = [slice(None)] * rho.ndim
    inner[axis] = slice(1, n + 1)
    out[tuple(inner)] = f
    if periodic:
        first = [slice(None)] * rho.ndim
        first[axis] = slice(0, 1)
        last = [slice(None)] * rho.ndim
        last[axis] = slice(n - 1, n)
        out[tuple(first)] = f[tuple(last)]
    else:
        last = [slice(None)] * rho.ndim
        last[axis] = slice(n, n + 1)
        out[tuple(last)] = 0.0
    return out


def flux_update(rho, ustar, vstar, source, params: StepParams, grid: GridSpec) -> np.ndarray:
    """Conservative update ``rho - dt div F + dt S`` with upwind fluxes."""
    rho = np.asarray(rho, dtype=float)
    fx = _face_flux(rho, np.asarray(ustar, float), grid.dx, 0, params)
    fy = _face_flux(rho, np.asarray(vstar, float), grid.dy, 1, params)
    new = (
        rho
        - params.dt / grid.dx * (fx[1:, :] - fx[:-1, :])
        - params.dt / grid.dy * (fy[:, 1:] - fy[:, :-1])
        + params.dt * source
    )
    if not np.all(np.isfinite(new)):
        raise StepError("non-finite density after flux update")
    return new


# --------------------------------------------------------------------------
# velocity correction
# --------------------------------------------------------------------------

def darcy_velocity(rho, params: StepParams, grid: GridSpec):
    """``-grad p`` with the pressure taken at face-averaged densities."""
    periodic = params.boundary == "periodic"
    m = params.m
    c = clip_density(np.asarray(rho, dtype=float))
    coef = m / (m - 1.0)
    px_p = (0.5 * (c + _shift(c, 1, 0, periodic))) ** (m - 1)
    px_m = (0.5 * (c + _shift(c, -1, 0, periodic))) ** (m - 1)
    py_p = (0.5 * (c + _shift(c, 1, 1, periodic))) ** (m - 1)
    py_m = (0.5 * (c + _shift(c, -1, 1, periodic))) ** (m - 1)
    u = -coef * (px_p - px_m) / grid.dx
    v = -coef * (py_p - py_m) / grid.dy
    return u, v


def correct_velocity(rho, params: StepParams, grid: GridSpec, ustar=None, vstar=None):
    """Velocity at the new level.

    Hard correction returns the Darcy velocity of ``rho``.  In relaxation
    mode the discrepancy ``W = u* - u_darcy`` decays exactly over the step,
    ``u = u_darcy + exp(-dt / eps^2) W``.
    """
    ud, vd = darcy_velocity(rho, params, grid)
    if params.epsilon is None:
        return ud, vd
    if ustar is None or vstar is None:
        raise ValueError("relaxation mode needs the predicted velocity")
    decay = np.exp(-params.dt / params.epsilon**2)
    return ud + decay * (ustar - ud), vd + decay * (vstar - vd)


@dataclass
class FieldState:
    """Deterministic state: density and cell-centred velocity at time ``t``."""

    rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    @classmethod
    def at_rest(cls, rho, params: StepParams, grid: GridSpec, t: float = 0.0) -> "FieldState":
        """State whose velocity is the Darcy velocity of ``rho``."""
        rho = np.array(rho, dtype=float)
        u, v = darcy_velocity(rho, params, grid)
        return cls(rho, u, v, t)

    def copy(self) -> "FieldState":
        return FieldState(self.rho.copy(), self.u.copy(), self.v.copy(), self.t)


def step(state: FieldState, source, params: StepParams, grid: GridSpec) -> FieldState:
    """One prediction / density update / correction cycle."""
    us, vs = predict_velocity(state.rho, state.u, state.v, source, params, grid)
    speed = max(np.abs(us).max(), np.abs(vs).max())
    cfl = speed * params.dt / min(grid.dx, grid.dy)
    if cfl > params.cfl_warn:
        log.warning("CFL number %.3f exceeds %.2f at t=%.4g", cfl, params.cfl_warn, state.t)
    rho = flux_update(state.rho, us, vs, source, params, grid)
    u, v = correct_velocity(rho, params, grid, us, vs)
    return FieldState(rho, u, v, state.t + params.dt)
