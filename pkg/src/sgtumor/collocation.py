"""Stochastic-collocation reference solver.

The deterministic kernel is run independently at every Gauss node with all
random inputs frozen at that node; moments are then formed by quadrature.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chaos import QuadratureRule, build_quadrature
from .kernel import FieldState, StepError, step
from .scenarios import Scenario, node_arg, node_initial
from .sg import RunError, march

THREADS_ENV = "SGTUMOR_THREADS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


class NodeRunError(RuntimeError):
    def __init__(self, node: int, z, cause: Exception):
        super().__init__(f"collocation node {node} (z={np.asarray(z).tolist()}) failed: {cause}")
        self.node = node
        self.cause = cause


@dataclass
class NodeEnsemble:
    """Node solutions at a common time, with their quadrature weights."""

    states: list
    weights: np.ndarray
    nodes: np.ndarray
    t: float

    def __post_init__(self):
        if len(self.states) != len(self.weights):
            raise ValueError("one state per quadrature node expected")

    @property
    def rho(self) -> np.ndarray:
        return np.stack([s.rho for s in self.states])


def node_growth(scenario: Scenario, rho: np.ndarray, z, grid) -> np.ndarray:
    """Growth rate field at a single node."""
    return scenario.closure.rates(rho[None], node_arg(z), grid)[0]


def run_node(scenario: Scenario, z, T: Optional[float] = None, snapshots=None):
    """Deterministic run with every random input bound to ``z``.

    Returns the final :class:`FieldState` and ``[(t, FieldState)]`` snapshots.
    """
    num = scenario.numerics
    grid = scenario.grid()
    params = num.step_params()
    T = num.T if T is None else T
    times = num.snapshot_times() if snapshots is None else list(snapshots)
    state = FieldState.at_rest(node_initial(scenario, z, grid), params, grid)

    def stepper(st):
        source = node_growth(scenario, st.rho, z, grid) * st.rho
        return step(st, source, params, grid)

    snaps = []
    final = march(state, stepper, T, params.dt, times, lambda st: snaps.append((st.t, st.copy())))
    return final, snaps


def _parallel_map(fn, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def sc_run(scenario: Scenario, quad: Optional[QuadratureRule] = None, T: Optional[float] = None,
           snapshots=None, workers: Optional[int] = None, runner=run_node):
    """Run every node and regroup the results by time.

    Returns ``(final, series)`` where ``final`` is the ensemble at ``T`` and
    ``series`` lists the ensembles at the snapshot times.  Ordering of the
    nodes is fixed, so results do not depend on ``workers``.
    """
    quad = quad or build_quadrature(scenario.space, scenario.numerics.nz)
    workers = default_workers() if workers is None else workers

    def one(q):
        z = quad.nodes[q]
        try:
            return runner(scenario, z, T, snapshots)
        except (StepError, RunError, FloatingPointError, ValueError) as exc:
            raise NodeRunError(q, z, exc) from exc

    results = _parallel_map(one, list(range(quad.size)), workers)
    final = NodeEnsemble([r[0] for r in results], quad.weights, quad.nodes, results[0][0].t)
    series = []
    for i, (t, _) in enumerate(results[0][1]):
        series.append(NodeEnsemble([r[1][i][1] for r in results], quad.weights, quad.nodes, t))
    return final, series


def weighted_moments(values: np.ndarray, weights: np.ndarray):
    """Mean and clamped SD over the leading axis, summed in node order."""
    weights = np.asarray(weights, dtype=float)
    mean = np.zeros(values.shape[1:])
    second = np.zeros(values.shape[1:])
    for w, f in zip(weights, values):
        mean += w * f
        second += w * f * f
    return mean, np.sqrt(np.maximum(0.0, second - mean * mean))


def sc_moments(ensemble: NodeEnsemble, field: str = "rho"):
    """``(mean, SD)`` of a state attribute across the ensemble."""
    values = np.stack([getattr(s, field) for s in ensemble.states])
    return weighted_moments(values, ensemble.weights)
