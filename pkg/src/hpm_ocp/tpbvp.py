"""
Linear time-invariant two-point boundary value problems in (x, lambda), and
residuals of the full nonlinear optimality system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import AccuracyError, BoundarySystemSingularError, DimensionError, SingularMatrixError
from .numerics import Grid, Trajectory, mat_exp, rk4_integrate, solve_linear
from .problem import OcpProblem


@dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    """``H = [[A, -S], [-Q, -A^T]]`` with ``S = B R^-1 B^T``."""

    H: np.ndarray

    @property
    def n(self) -> int:
        return self.H.shape[0] // 2

    @property
    def S(self) -> np.ndarray:
        n = self.n
        return -self.H[:n, n:]


@dataclass(frozen=True, eq=False)
class LinearTpbvp:
    system: HamiltonianSystem
    forcing: Optional[Trajectory]
    x_initial: np.ndarray
    x_final: np.ndarray
    grid: Grid


def control_gain(p: OcpProblem) -> np.ndarray:
    """``R^-1 B^T``.

    An LU solve rather than a Cholesky factor: scaling R by a power of two then
    scales the gain by exactly its inverse.
    """
    return np.linalg.solve(p.R, p.B.T)


def build_hamiltonian(p: OcpProblem) -> HamiltonianSystem:
    S = p.B @ control_gain(p)
    S = 0.5 * (S + S.T)
    H = np.block([[p.A, -S], [-p.Q, -p.A.T]])
    return HamiltonianSystem(H)


def solve_linear_tpbvp(prob: LinearTpbvp) -> Tuple[Trajectory, Trajectory]:
    """Solve ``z' = H z + g`` with x fixed at both ends.

    The particular response to g is integrated from rest, the homogeneous
    response comes from the transition matrix, and the unknown initial
    costate solves ``Phi12 lam0 = b - Phi11 a - w_x(tf)``.  The full
    trajectory is then integrated from ``(a, lam0)``.
    """
    H = prob.system.H
    n = prob.system.n
    grid = prob.grid
    a = np.asarray(prob.x_initial, dtype=float)
    b = np.asarray(prob.x_final, dtype=float)
    if a.shape != (n,) or b.shape != (n,):
        raise DimensionError(f"boundary values must have length {n}")
    if prob.forcing is not None and prob.forcing.grid != grid:
        raise DimensionError("forcing grid differs from solver grid")

    if prob.forcing is None:
        w_final = np.zeros(2 * n)
    else:
        w_final = rk4_integrate(H, prob.forcing, np.zeros(2 * n), grid).final

    Phi = mat_exp(H, grid.tf - grid.t0)
    Phi11, Phi12 = Phi[:n, :n], Phi[:n, n:]
    try:
        lam0 = solve_linear(Phi12, b - Phi11 @ a - w_final[:n])
    except SingularMatrixError as exc:
        raise BoundarySystemSingularError(
            f"boundary system is singular on [{grid.t0}, {grid.tf}]: {exc}"
        ) from exc

    z = rk4_integrate(H, prob.forcing, np.concatenate([a, lam0]), grid)
    x = Trajectory(grid, z.values[:, :n])
    lam = Trajectory(grid, z.values[:, n:])

    miss = float(np.max(np.abs(x.final - b)))
    if miss > 1e-8 * max(1.0, float(np.max(np.abs(b)))):
        raise AccuracyError(
            f"terminal state misses its target by {miss:.3e}; refine the grid"
        )
    return x, lam


def _node_derivative(traj: Trajectory) -> np.ndarray:
    # central difference across the two midpoints around each interior node
    v = traj.values
    return (v[3:-1:2] - v[1:-3:2]) / traj.grid.step


def residual_norm(p: OcpProblem, x: Trajectory, lam: Trajectory) -> Tuple[float, float]:
    """Sup-norm over interior nodes of the state and costate equation defects."""
    if x.grid != lam.grid:
        raise DimensionError("state and costate live on different grids")
    S = build_hamiltonian(p).S
    xs = x.values[2:-1:2]
    ls = lam.values[2:-1:2]
    dx = _node_derivative(x)
    dl = _node_derivative(lam)
    r1 = dx - xs @ p.A.T + ls @ S.T - p.f(xs)
    J = p.f.jacobian(xs)
    if p.jacobian_transpose:
        coupling = np.einsum("kij,ki->kj", J, ls)
    else:
        coupling = np.einsum("kij,kj->ki", J, ls)
    r2 = dl + xs @ p.Q.T + ls @ p.A + coupling
    return float(np.max(np.abs(r1), initial=0.0)), float(np.max(np.abs(r2), initial=0.0))
