"""Stochastic-Galerkin driver.

The density is carried as ``K`` gPC coefficient fields, each with its own
velocity pair.  Within a step every mode goes through the deterministic
prediction / flux / correction cycle of :mod:`sgtumor.kernel`; the modes
only talk to each other through the projected growth matrix.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .chaos import GpcBasis, Projector, build_basis, build_quadrature
from .grid import GridSpec
from .kernel import FieldState, StepError, StepParams, darcy_velocity, step
from .nutrient import assemble_nutrient_matrix
from .scenarios import COUPLINGS, Scenario, sample_initial

log = logging.getLogger(__name__)

Sink = Callable[[float, object, np.ndarray], None]


class RunError(StepError):
    """A step failure inside a time march, tagged with the step index."""

    def __init__(self, step_index: int, cause: StepError):
        super().__init__(f"step {step_index} failed: {cause}", getattr(cause, "residual", None))
        self.step_index = step_index


@dataclass
class ModeState:
    """gPC coefficients of density and velocity, each of shape ``(K, nx, ny)``."""

    rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: float
    basis: GpcBasis

    def __post_init__(self):
        K = self.basis.size
        for name in ("rho", "u", "v"):
            arr = getattr(self, name)
            if arr.ndim != 3 or arr.shape[0] != K:
                raise ValueError(f"{name} has shape {arr.shape}, expected ({K}, nx, ny)")

    @property
    def K(self) -> int:
        return self.basis.size

    def mode(self, k: int) -> FieldState:
        return FieldState(self.rho[k], self.u[k], self.v[k], self.t)

    def copy(self) -> "ModeState":
        return ModeState(self.rho.copy(), self.u.copy(), self.v.copy(), self.t, self.basis)


def growth_sources(C: np.ndarray, rho: np.ndarray, coupling: str = "galerkin") -> np.ndarray:
    """Growth source per mode from per-cell matrices ``C`` (``(nx, ny, K, K)``).

    ``galerkin``: ``S_k = sum_l C_kl rho_l``.
    ``diagonal``: ``S_k = (sum_l C_lk) rho_k``.
    """
    if C.shape[-1] != rho.shape[0]:
        raise ValueError(f"growth matrix has {C.shape[-1]} modes, density has {rho.shape[0]}")
    if coupling == "galerkin":
        return np.einsum("xykl,lxy->kxy", C, rho)
    if coupling == "diagonal":
        return np.moveaxis(C.sum(axis=-2), -1, 0) * rho
    raise ValueError(f"unknown coupling {coupling!r}; choose from {COUPLINGS}")


def velocity_at_rest(rho: np.ndarray, params: StepParams, grid: GridSpec):
    """Per-mode Darcy velocities of a ``(K, nx, ny)`` coefficient stack."""
    uv = [darcy_velocity(r, params, grid) for r in rho]
    return np.stack([a for a, _ in uv]), np.stack([b for _, b in uv])


def advance_modes(rho, u, v, sources, t, params: StepParams, grid: GridSpec, workers: int = 1):
    """Push every mode through one kernel step with its own source.

    Returns ``(rho, u, v)`` stacks.  Modes are independent here, so the
    result does not depend on ``workers``.
    """
    def one(k):
        return step(FieldState(rho[k], u[k], v[k], t), sources[k], params, grid)

    K = rho.shape[0]
    if workers > 1 and K > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            states = list(pool.map(one, range(K)))
    else:
        states = [one(k) for k in range(K)]
    return (np.stack([s.rho for s in states]), np.stack([s.u for s in states]),
            np.stack([s.v for s in states]))


class StochasticGalerkin:
    """SG solver for a single-species scenario.

    Parameters
    ----------
    scenario : Scenario
    order : int, optional
        Total polynomial degree; defaults to the scenario's.
    n_nodes : int, optional
        Gauss nodes per random dimension for the projections.
    coupling : {"galerkin", "diagonal"}, optional
    workers : int
        Threads used to advance modes concurrently.
    """

    def __init__(self, scenario: Scenario, order: Optional[int] = None,
                 n_nodes: Optional[int] = None, coupling: Optional[str] = None, workers: int = 1):
        num = scenario.numerics
        self.scenario = scenario
        self.grid = scenario.grid()
        self.params = num.step_params()
        self.basis = build_basis(scenario.space, num.order if order is None else order)
        self.quad = build_quadrature(scenario.space, n_nodes or num.nz)
        self.projector = Projector(self.basis, self.quad)
        self.coupling = coupling or num.coupling
        if self.coupling not in COUPLINGS:
            raise ValueError(f"unknown coupling {self.coupling!r}; choose from {COUPLINGS}")
        self.workers = workers

    def initial_state(self) -> ModeState:
        rho = sample_initial(self.scenario, self.projector, self.grid)
        u, v = velocity_at_rest(rho, self.params, self.grid)
        return ModeState(rho, u, v, 0.0, self.basis)

    def growth_matrix(self, state: ModeState) -> np.ndarray:
        return assemble_nutrient_matrix(state.rho, self.scenario.closure, self.projector, self.grid)

    def sources(self, state: ModeState) -> np.ndarray:
        return growth_sources(self.growth_matrix(state), state.rho, self.coupling)

    def step(self, state: ModeState) -> ModeState:
        S = self.sources(state)
        rho, u, v = advance_modes(state.rho, state.u, state.v, S, state.t, self.params,
                                  self.grid, self.workers)
        return ModeState(rho, u, v, state.t + self.params.dt, self.basis)

    def node_minimum(self, state: ModeState) -> float:
        """Smallest reconstructed density over quadrature nodes (diagnostic only)."""
        return float(np.tensordot(self.projector.phi, state.rho, axes=([1], [0])).min())

    def run(self, T: Optional[float] = None, snapshots=None, sink: Optional[Sink] = None,
            state: Optional[ModeState] = None):
        """March to ``T`` with a fixed step.

        Returns the final state and a list of ``(t, ModeState)`` snapshots.
        ``sink`` receives ``(t, k, rho_k)`` for every snapshot and mode.
        """
        num = self.scenario.numerics
        T = num.T if T is None else T
        times = num.snapshot_times() if snapshots is None else list(snapshots)
        state = state or self.initial_state()

        def emit(st):
            snaps.append((st.t, st.copy()))
            if sink is not None:
                for k in range(st.K):
                    sink(st.t, k, st.rho[k])

        snaps = []
        return march(state, self.step, T, self.params.dt, times, emit), snaps


def march(state, stepper, T: float, dt: float, times, emit):
    """Fixed-step time loop shared by all drivers.

    ``emit`` is called on the states whose step index is nearest to one of
    ``times``.  Step failures are re-raised as :class:`RunError`.
    """
    n_steps = int(round(T / dt))
    marks = sorted({int(round(t / dt)) for t in times if t <= T + 0.5 * dt})
    t0 = state.t
    if 0 in marks:
        emit(state)
    for n in range(1, n_steps + 1):
        try:
            state = stepper(state)
        except StepError as exc:
            raise RunError(n, exc) from exc
        state.t = t0 + n * dt
        if n in marks:
            emit(state)
    return state


def run_sg(scenario: Scenario, sink: Optional[Sink] = None, **kw):
    """Convenience wrapper: build a :class:`StochasticGalerkin` and run it."""
    return StochasticGalerkin(scenario, **kw).run(sink=sink)
