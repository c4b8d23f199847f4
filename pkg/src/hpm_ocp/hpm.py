"""
Homotopy perturbation driver.

Order 0 solves the linear part of the optimality system with the true
boundary states.  Every higher order solves the same linear system with zero
boundary states, forced by the series coefficients of the nonlinear terms
accumulated so far.  After each order the truncated costate sum gives a
control, the control is applied to the real nonlinear plant, and the
resulting cost is compared with the previous one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .errors import HpmOcpError, ValidationError
from .numerics import Grid, Trajectory, simpson_quadrature
from .oracle import simulate_nonlinear
from .problem import OcpProblem, require_valid
from .series import SeriesTerm, he_forcing
from .tpbvp import LinearTpbvp, build_hamiltonian, control_gain, solve_linear_tpbvp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HpmConfig:
    epsilon: float = 1e-12
    max_order: int = 10
    grid_intervals: int = 1000
    jacobian_transpose: Optional[bool] = None  # None keeps the problem's own flag

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        # max_order = 0 is accepted: it stops before any cost difference exists
        if int(self.max_order) != self.max_order or self.max_order < 0:
            raise ValidationError(f"max_order must be a nonnegative integer, got {self.max_order}")
        if int(self.grid_intervals) != self.grid_intervals or self.grid_intervals < 2:
            raise ValidationError(f"grid_intervals must be >= 2, got {self.grid_intervals}")

    def apply(self, p: OcpProblem) -> OcpProblem:
        if self.jacobian_transpose is None or self.jacobian_transpose == p.jacobian_transpose:
            return p
        return replace(p, jacobian_transpose=self.jacobian_transpose)

    def grid_for(self, p: OcpProblem) -> Grid:
        return Grid(p.t0, p.tf, self.grid_intervals)


@dataclass
class HpmSolution:
    terms: List[SeriesTerm]
    control: Optional[Trajectory]
    simulated_state: Optional[Trajectory]
    cost_history: List[float]
    converged: bool
    achieved_order: int
    grid: Grid

    @property
    def cost(self) -> float:
        return self.cost_history[-1]

    @property
    def cost_deltas(self) -> List[float]:
        J = self.cost_history
        return [abs(J[k] - J[k - 1]) for k in range(1, len(J))]

    def state_sum(self, order: Optional[int] = None) -> Trajectory:
        """Partial sum of the state series up to ``order`` (default: all terms)."""
        return _partial_sum([t.x for t in self.terms], order)

    def costate_sum(self, order: Optional[int] = None) -> Trajectory:
        return _partial_sum([t.lam for t in self.terms], order)


class HpmSolveError(HpmOcpError):
    """A subproblem failed; ``partial`` holds the orders and costs computed so far."""

    def __init__(self, message, partial: HpmSolution):
        super().__init__(message)
        self.partial = partial


def _partial_sum(trajs: Sequence[Trajectory], order):
    upto = len(trajs) - 1 if order is None else order
    total = np.sum([t.values for t in trajs[: upto + 1]], axis=0)
    return Trajectory(trajs[0].grid, total)


def solve_order_zero(p: OcpProblem, grid: Grid) -> SeriesTerm:
    sys = build_hamiltonian(p)
    x, lam = solve_linear_tpbvp(LinearTpbvp(sys, None, p.x0, p.xf, grid))
    return SeriesTerm(0, x, lam)


def solve_order_n(p: OcpProblem, prior: Sequence[SeriesTerm], grid: Grid) -> SeriesTerm:
    n = len(prior)
    g = he_forcing(n, prior, p)
    zero = np.zeros(p.n)
    x, lam = solve_linear_tpbvp(LinearTpbvp(build_hamiltonian(p), g, zero, zero, grid))
    return SeriesTerm(n, x, lam)


def control_from_costate(p: OcpProblem, lam_sum: Trajectory) -> Trajectory:
    """``u = -R^-1 B^T lam`` at every sample."""
    return Trajectory(lam_sum.grid, -lam_sum.values @ control_gain(p).T)


def running_cost(p: OcpProblem, x: Trajectory, u: Trajectory) -> float:
    xv, uv = x.values, u.values
    integrand = 0.5 * (np.einsum("ki,ij,kj->k", xv, p.Q, xv) + np.einsum("ki,ij,kj->k", uv, p.R, uv))
    return simpson_quadrature(Trajectory(x.grid, integrand))


def evaluate_cost(p: OcpProblem, u: Trajectory):
    """Simulate the nonlinear plant under ``u`` and return ``(x_sim, J)``."""
    x_sim = simulate_nonlinear(p, u)
    return x_sim, running_cost(p, x_sim, u)


def solve_hpm(p: OcpProblem, cfg: Optional[HpmConfig] = None) -> HpmSolution:
    cfg = cfg or HpmConfig()
    p = require_valid(cfg.apply(p))
    grid = cfg.grid_for(p)
    sol = HpmSolution([], None, None, [], False, 0, grid)

    def fail(exc, what):
        raise HpmSolveError(f"{what} failed: {exc}", sol) from exc

    try:
        sol.terms.append(solve_order_zero(p, grid))
    except HpmOcpError as exc:
        fail(exc, "order 0 subproblem")

    order = 0
    while True:
        try:
            u = control_from_costate(p, sol.costate_sum())
            x_sim, J = evaluate_cost(p, u)
        except HpmOcpError as exc:
            fail(exc, f"cost evaluation at order {order}")
        sol.control, sol.simulated_state = u, x_sim
        sol.cost_history.append(J)
        sol.achieved_order = order
        log.debug("order %d: J = %.15g", order, J)

        if order >= 1 and abs(J - sol.cost_history[-2]) < cfg.epsilon:
            sol.converged = True
            return sol
        if order >= cfg.max_order:
            return sol

        order += 1
        try:
            sol.terms.append(solve_order_n(p, sol.terms, grid))
        except HpmOcpError as exc:
            fail(exc, f"order {order} subproblem")
