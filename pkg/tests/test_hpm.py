import numpy as np
import pytest

from hpm_ocp import Grid, HpmConfig, Trajectory, solve_hpm
from hpm_ocp.errors import ValidationError
from hpm_ocp.hpm import (
    HpmSolveError,
    control_from_costate,
    evaluate_cost,
    solve_order_n,
    solve_order_zero,
)
from hpm_ocp.problem import Monomial, PolyVectorField

from builders import random_problem, scalar_problem

INERTIA = np.array([86.24, 85.07, 113.59])
X0 = np.array([0.01, 0.005, 0.001])
GRID = Grid(0.0, 100.0, 1000)


def test_config_checks():
    with pytest.raises(ValidationError):
        HpmConfig(epsilon=0.0)
    with pytest.raises(ValidationError):
        HpmConfig(max_order=-1)
    with pytest.raises(ValidationError):
        HpmConfig(grid_intervals=1)


def test_order_zero_spacecraft(spacecraft):
    term = solve_order_zero(spacecraft, GRID)
    assert term.order == 0
    np.testing.assert_allclose(term.lam.values, np.tile(INERTIA**2 * X0 / 100, (GRID.size, 1)), rtol=1e-12)
    np.testing.assert_allclose(term.x.values, np.outer(1 - GRID.times / 100, X0), atol=1e-15)


def test_order_zero_zero_boundary():
    rng = np.random.default_rng(31)
    p = random_problem(rng, 2)
    p = p.__class__(**{**p.__dict__, "x0": np.zeros(2), "xf": np.zeros(2)})
    term = solve_order_zero(p, Grid(0.0, 1.0, 50))
    assert term.x.sup_norm() == 0.0 and term.lam.sup_norm() == 0.0


def test_order_n_zero_field_vanishes():
    p = scalar_problem(a=0.5, q=1.0)
    grid = Grid(0.0, 1.0, 100)
    terms = [solve_order_zero(p, grid)]
    for n in range(1, 4):
        terms.append(solve_order_n(p, terms, grid))
        assert terms[-1].order == n
        assert terms[-1].x.sup_norm() == 0.0 and terms[-1].lam.sup_norm() == 0.0


def test_order_one_spacecraft_is_small(spacecraft):
    terms = [solve_order_zero(spacecraft, GRID)]
    first = solve_order_n(spacecraft, terms, GRID)
    assert 0 < first.x.sup_norm() < 1e-2 * terms[0].x.sup_norm()
    assert np.max(np.abs(first.x.initial)) == 0.0
    assert np.max(np.abs(first.x.final)) <= 1e-15


def test_order_one_is_linear_in_field(spacecraft):
    doubled = spacecraft.__class__(**{**spacecraft.__dict__, "f": spacecraft.f.scaled(2.0)})
    zero = [solve_order_zero(spacecraft, GRID)]
    one = solve_order_n(spacecraft, zero, GRID)
    two = solve_order_n(doubled, zero, GRID)
    np.testing.assert_array_equal(two.x.values, 2.0 * one.x.values)
    np.testing.assert_array_equal(two.lam.values, 2.0 * one.lam.values)


# -- control and cost --------------------------------------------------------

def test_control_zero_costate(spacecraft):
    u = control_from_costate(spacecraft, Trajectory.zeros(GRID, 3))
    assert u.dim == 3 and u.sup_norm() == 0.0


def test_control_spacecraft_order_zero(spacecraft):
    u = control_from_costate(spacecraft, solve_order_zero(spacecraft, GRID).lam)
    assert u.initial[0] == pytest.approx(-0.0086240, abs=1e-7)
    np.testing.assert_allclose(u.values, np.tile(-INERTIA * X0 / 100, (GRID.size, 1)), rtol=1e-12)


def test_control_halves_when_R_doubles():
    rng = np.random.default_rng(32)
    p = random_problem(rng, 3)
    p2 = p.__class__(**{**p.__dict__, "R": 2.0 * p.R})
    grid = Grid(0.0, 1.0, 20)
    lam = Trajectory(grid, rng.uniform(-1, 1, (grid.size, 3)))
    np.testing.assert_allclose(control_from_costate(p2, lam).values,
                               0.5 * control_from_costate(p, lam).values, rtol=1e-15, atol=0)


def test_cost_zero_control():
    p = scalar_problem(q=0.0)
    x, J = evaluate_cost(p, Trajectory.zeros(Grid(0.0, 1.0, 10), 1))
    assert J == 0.0
    np.testing.assert_array_equal(x.values, 1.0)


def test_cost_unit_control_over_two_seconds():
    p = scalar_problem(tf=2.0)
    grid = Grid(0.0, 2.0, 10)
    _, J = evaluate_cost(p, Trajectory(grid, np.ones((grid.size, 1))))
    assert J == pytest.approx(1.0, abs=1e-14)


def test_cost_spacecraft_order_zero(spacecraft):
    u = control_from_costate(spacecraft, solve_order_zero(spacecraft, GRID).lam)
    _, J = evaluate_cost(spacecraft, u)
    assert J == pytest.approx(50 * np.sum((INERTIA * X0 / 100) ** 2), abs=1e-12)
    assert J == pytest.approx(0.0046878, abs=1e-6)


# -- driver ------------------------------------------------------------------

def test_linear_problem_converges_at_order_one():
    p = scalar_problem(a=1.0, q=1.0)
    sol = solve_hpm(p, HpmConfig(epsilon=1e-14, grid_intervals=200))
    assert sol.converged and sol.achieved_order == 1
    assert sol.cost_history[0] == sol.cost_history[1]
    assert sol.terms[1].x.sup_norm() <= 1e-12


def test_loose_tolerance_stops_at_order_one(spacecraft):
    sol = solve_hpm(spacecraft, HpmConfig(epsilon=1.0))
    assert sol.converged and sol.achieved_order == 1
    assert len(sol.cost_history) == 2


def test_order_cap_zero_is_not_converged(spacecraft):
    sol = solve_hpm(spacecraft, HpmConfig(max_order=0))
    assert not sol.converged and sol.achieved_order == 0
    assert len(sol.cost_history) == 1 and len(sol.terms) == 1


def test_spacecraft_benchmark(spacecraft_solution):
    sol = spacecraft_solution
    assert sol.converged and 2 <= sol.achieved_order <= 6
    assert abs(sol.cost - 0.004689) <= 2e-5
    assert len(sol.cost_history) == sol.achieved_order + 1
    assert sol.cost_deltas[-1] < 1e-12


def test_partial_sums_hit_boundaries(spacecraft, spacecraft_solution):
    sol = spacecraft_solution
    for M in range(len(sol.terms)):
        x = sol.state_sum(M)
        np.testing.assert_array_equal(x.initial, spacecraft.x0)
        assert np.max(np.abs(x.final - spacecraft.xf)) <= 1e-15


def test_subproblem_failure_keeps_partial_results():
    p = scalar_problem(x0=0.0, xf=5.0, tf=10.0, f=PolyVectorField(((Monomial(-2.0, (3,)),),)))
    with pytest.raises(HpmSolveError) as info:
        solve_hpm(p, HpmConfig(max_order=4, grid_intervals=200))
    partial = info.value.partial
    assert "cost evaluation at order 1" in str(info.value)
    assert partial.cost_history == [pytest.approx(1.25, rel=1e-12)]
    assert len(partial.terms) == 2
