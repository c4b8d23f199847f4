"""
Independent checks for the series solver.

``simulate_nonlinear`` drives the true plant with a sampled control.
``shooting_solve`` attacks the full nonlinear optimality system directly by
Newton iteration on the initial costate.  ``analytic_scalar_lq`` is the exact
solution of the scalar linear-quadratic instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, DivergenceError, SingularMatrixError, ValidationError
from .numerics import Grid, Trajectory, rk4_march, solve_linear
from .problem import OcpProblem
from .tpbvp import build_hamiltonian, control_gain

DIVERGENCE_LIMIT = 1e12


def _divergence_guard(z, k):
    if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > DIVERGENCE_LIMIT:
        raise DivergenceError(f"state norm exceeded {DIVERGENCE_LIMIT:g} after {k} steps")


def simulate_nonlinear(p: OcpProblem, u: Trajectory) -> Trajectory:
    """RK4 run of ``x' = A x + B u(t) + f(x)`` from ``x0`` under a sampled control."""
    if u.dim != p.m:
        raise DimensionError(f"control has dimension {u.dim}, problem expects {p.m}")
    A, B, f = p.A, p.B, p.f
    Bu = u.values @ B.T

    def rhs(x, bu):
        return A @ x + bu + f(x)

    with np.errstate(over="raise", invalid="raise"):
        try:
            values = rk4_march(rhs, p.x0, u.grid, Bu, guard=_divergence_guard)
        except FloatingPointError as exc:
            raise DivergenceError(f"simulation overflowed: {exc}") from exc
    return Trajectory(u.grid, values)


@dataclass
class ShootingReport:
    converged: bool
    iterations: int
    final_residual: np.ndarray
    lam0: np.ndarray
    x: Optional[Trajectory] = None
    lam: Optional[Trajectory] = None
    message: str = ""


def _hamiltonian_rhs(p: OcpProblem):
    n = p.n
    A, Q, f = p.A, p.Q, p.f
    S = build_hamiltonian(p).S
    jac = f.jacobian
    transpose = p.jacobian_transpose

    def rhs(z, _g):
        x, lam = z[..., :n], z[..., n:]
        J = jac(x)
        if transpose:
            coupling = np.einsum("...ij,...i->...j", J, lam)
        else:
            coupling = np.einsum("...ij,...j->...i", J, lam)
        dx = x @ A.T - lam @ S.T + f(x)
        dlam = -(x @ Q.T) - lam @ A - coupling
        return np.concatenate([dx, dlam], axis=-1)

    return rhs


def shooting_solve(
    p: OcpProblem,
    grid: Grid,
    lam0_guess=None,
    max_iterations: int = 50,
    max_halvings: int = 20,
) -> ShootingReport:
    """Single shooting with Newton steps on the initial costate.

    The default starting point is the initial costate of the linear
    (f = 0) problem.  Non-convergence is reported, never raised.
    """
    n = p.n
    if lam0_guess is None:
        from .hpm import solve_order_zero

        lam0_guess = solve_order_zero(p, grid).lam.initial
    lam0 = np.array(lam0_guess, dtype=float)
    if lam0.shape != (n,):
        raise DimensionError(f"costate guess must have length {n}")
    if not np.all(np.isfinite(lam0)):
        raise ValidationError("costate guess must be finite")

    rhs = _hamiltonian_rhs(p)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(p.xf))), float(np.max(np.abs(p.x0))))

    def terminal_states(lams):
        # lams: (batch, n) -> x(tf) per batch row; inf where the flow diverges
        z0 = np.concatenate([np.broadcast_to(p.x0, lams.shape), lams], axis=-1)
        try:
            with np.errstate(over="raise", invalid="raise"):
                z = rk4_march(rhs, z0, grid, midpoints=False, guard=_divergence_guard)
        except (DivergenceError, FloatingPointError):
            if lams.shape[0] == 1:
                return np.full((1, n), np.inf)
            return np.vstack([terminal_states(l[None]) for l in lams])
        return z[-1, :, :n]

    def residual(l):
        return terminal_states(l[None])[0] - p.xf

    r = residual(lam0)
    rnorm = float(np.max(np.abs(r)))
    iterations = 0
    message = ""
    while not rnorm <= tol:
        if iterations >= max_iterations:
            message = f"no convergence after {max_iterations} iterations"
            break
        if not math.isfinite(rnorm):
            message = "flow diverges from the current costate guess"
            break
        steps = 1e-7 * np.maximum(1.0, np.abs(lam0))
        probes = lam0[None, :] + np.diag(steps)
        xf_probe = terminal_states(probes)
        jac = ((xf_probe - p.xf) - r[None, :]) / steps[:, None]  # row i = d r / d lam_i
        jac = jac.T
        if not np.all(np.isfinite(jac)):
            message = "finite-difference Jacobian is not finite"
            break
        try:
            step = solve_linear(jac, -r)
        except SingularMatrixError as exc:
            message = f"singular shooting Jacobian: {exc}"
            break

        alpha = 1.0
        for _ in range(max_halvings + 1):
            trial = lam0 + alpha * step
            r_trial = residual(trial)
            trial_norm = float(np.max(np.abs(r_trial)))
            if trial_norm < rnorm:
                break
            alpha *= 0.5
        else:
            iterations += 1
            message = "line search failed to reduce the terminal residual"
            break
        lam0, r, rnorm = trial, r_trial, trial_norm
        iterations += 1

    converged = rnorm <= tol
    report = ShootingReport(converged, iterations, r, lam0, message=message)
    if converged:
        z0 = np.concatenate([p.x0, lam0])
        z = rk4_march(rhs, z0, grid)
        report.x = Trajectory(grid, z[:, :n])
        report.lam = Trajectory(grid, z[:, n:])
    return report


def shooting_control(p: OcpProblem, report: ShootingReport) -> Trajectory:
    if report.lam is None:
        raise ValueError("shooting did not converge; no control available")
    return Trajectory(report.lam.grid, -report.lam.values @ control_gain(p).T)


@dataclass
class ScalarLqSolution:
    x: Trajectory
    lam: Trajectory
    u: Trajectory
    J: float
    lam0: float


def analytic_scalar_lq(a, b, q, r, x0, xf, t0, tf, intervals: int = 1000) -> ScalarLqSolution:
    """Exact solution of the scalar problem ``x' = a x + b u`` with f = 0.

    With ``mu = sqrt(a**2 + b**2 q / r)``, ``C(s) = cosh(mu s)`` and
    ``S(s) = sinh(mu s)/mu`` the trajectories are

        x(s)   = x0 C + (a x0 - b**2 lam0 / r) S
        lam(s) = lam0 C - (q x0 + a lam0) S

    and the cost integrals of C**2, C S and S**2 have closed forms.
    """
    if r <= 0 or q < 0 or b == 0 or not tf > t0:
        raise ValidationError("need r > 0, q >= 0, b != 0 and tf > t0")
    grid = Grid(t0, tf, intervals)
    T = tf - t0
    mu = math.sqrt(a * a + b * b * q / r)

    def C(s):
        return np.cosh(mu * s)

    def S(s):
        if mu == 0.0:
            return np.asarray(s, dtype=float)
        return np.sinh(mu * s) / mu

    phi12 = -(b * b / r) * S(T)
    if phi12 == 0.0:
        raise SingularMatrixError("degenerate horizon: Phi12 vanishes")
    phi11 = C(T) + a * S(T)
    lam0 = (xf - phi11 * x0) / phi12

    s = grid.times - t0
    alpha, beta = x0, a * x0 - b * b * lam0 / r
    gamma, delta = lam0, -(q * x0 + a * lam0)
    x = alpha * C(s) + beta * S(s)
    lam = gamma * C(s) + delta * S(s)
    u = -(b / r) * lam

    cc, cs, ss = _cosh_sinh_moments(mu, T)
    int_x2 = alpha**2 * cc + 2 * alpha * beta * cs + beta**2 * ss
    int_l2 = gamma**2 * cc + 2 * gamma * delta * cs + delta**2 * ss
    J = 0.5 * (q * int_x2 + (b * b / r) * int_l2)
    return ScalarLqSolution(Trajectory(grid, x), Trajectory(grid, lam), Trajectory(grid, u), float(J), float(lam0))


def _cosh_sinh_moments(mu, T):
    """Integrals over [0, T] of C**2, C*S and S**2 (S = sinh(mu s)/mu)."""
    z = mu * T
    if z < 1e-4:
        # Taylor expansion in mu**2 keeps the small-mu case free of cancellation
        m2 = mu * mu
        cc = T + m2 * T**3 / 3.0
        cs = T**2 / 2.0 + m2 * T**4 / 6.0
        ss = T**3 / 3.0 + m2 * T**5 / 15.0
        return cc, cs, ss
    cc = T / 2.0 + math.sinh(2 * z) / (4 * mu)
    cs = math.sinh(z) ** 2 / (2 * mu * mu)
    ss = (math.sinh(2 * z) / (2 * mu) - T) / (2 * mu * mu)
    return cc, cs, ss
