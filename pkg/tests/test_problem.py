import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hpm_ocp import OcpProblem, spacecraft_problem, validate
from hpm_ocp.errors import DimensionError, ProblemValidationError
from hpm_ocp.problem import Monomial, PolyVectorField, differentiate, eval_field, require_valid

from builders import random_field, scalar_problem

I1, I2, I3 = 86.24, 85.07, 113.59


def codes(p):
    return {i.code for i in validate(p)}


def test_eval_at_origin_is_zero():
    rng = np.random.default_rng(3)
    for _ in range(20):
        f = random_field(rng, 3)
        np.testing.assert_array_equal(eval_field(f, np.zeros(3)), np.zeros(3))


def test_eval_spacecraft_first_component(spacecraft):
    val = eval_field(spacecraft.f, [0.01, 0.005, 0.001])
    expected = -((I3 - I2) / I1) * 0.005 * 0.001
    assert val[0] == pytest.approx(expected, rel=1e-14)
    assert val[0] == pytest.approx(-1.6535e-6, rel=1e-4)


def test_eval_hand_example():
    f = PolyVectorField(((Monomial(3.0, (2, 1)),), ()))
    np.testing.assert_array_equal(eval_field(f, [2.0, -1.0]), [-12.0, 0.0])


def test_eval_batched_matches_pointwise():
    rng = np.random.default_rng(4)
    f = random_field(rng, 3)
    X = rng.uniform(-1, 1, (7, 3))
    batched = eval_field(f, X)
    for k in range(7):
        np.testing.assert_allclose(batched[k], eval_field(f, X[k]), rtol=1e-14, atol=1e-16)


def test_eval_dimension_mismatch():
    f = PolyVectorField(((Monomial(1.0, (1, 1)),), ()))
    with pytest.raises(DimensionError):
        eval_field(f, [1.0, 2.0, 3.0])


def test_differentiate_product_rule():
    c = 1.7
    f = PolyVectorField(((Monomial(c, (0, 1, 1)),), (), ()))
    J = differentiate(f)
    assert J.entries[0][0] == ()
    assert J.entries[0][1] == (Monomial(c, (0, 0, 1)),)
    assert J.entries[0][2] == (Monomial(c, (0, 1, 0)),)
    x = np.array([0.3, -2.0, 5.0])
    np.testing.assert_allclose(J(x)[0], [0.0, c * 5.0, c * -2.0])


def test_differentiate_power():
    f = PolyVectorField(((Monomial(3.0, (2, 1)),), ()))
    J = differentiate(f)
    assert J.entries[0][0] == (Monomial(6.0, (1, 1)),)
    assert J.entries[0][1] == (Monomial(3.0, (2, 0)),)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(11)
    step = 1e-5
    for _ in range(100):
        n = int(rng.integers(1, 4))
        f = random_field(rng, n, max_degree=4, terms=4)
        x = rng.uniform(-1, 1, n)
        J = differentiate(f)(x)
        fd = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = step
            fd[:, j] = (eval_field(f, x + e) - eval_field(f, x - e)) / (2 * step)
        assert np.max(np.abs(J - fd)) <= 1e-6 * max(1.0, np.max(np.abs(J)))


@settings(max_examples=50, deadline=None)
@given(st.integers(-6, 6), st.sampled_from([1.0, -1.0]), st.integers(0, 10 ** 6))
def test_eval_linear_in_coefficients(power, sign, seed):
    rng = np.random.default_rng(seed)
    f = random_field(rng, 3)
    x = rng.uniform(-1, 1, 3)
    alpha = sign * 2.0 ** power  # exact in binary floating point
    np.testing.assert_array_equal(eval_field(f.scaled(alpha), x), alpha * eval_field(f, x))


# -- validation ------------------------------------------------------------

def test_spacecraft_is_valid():
    p = spacecraft_problem()
    assert validate(p) == []
    np.testing.assert_allclose(np.diag(p.B), [1 / I1, 1 / I2, 1 / I3])
    assert require_valid(p) is p


def test_zero_R_is_not_pd():
    assert "R_NOT_PD" in codes(scalar_problem(r=0.0))


def test_linear_monomial_rejected_with_hint():
    f = PolyVectorField(((Monomial(2.0, (1,)),),))
    issues = validate(scalar_problem(f=f))
    assert [i.code for i in issues] == ["MONOMIAL_DEGREE_LT_2"]
    assert "fold linear terms into A" in issues[0].hint


def test_validate_reports_all_violations():
    f = PolyVectorField(((Monomial(2.0, (1,)), Monomial(1.0, (9,))),))
    p = OcpProblem(A=[[0.0]], B=[[1.0]], Q=[[-1.0]], R=[[0.0]], f=f,
                   t0=1.0, tf=0.0, x0=[0.0], xf=[1.0])
    assert {"Q_NOT_PSD", "R_NOT_PD", "MONOMIAL_DEGREE_LT_2", "MONOMIAL_DEGREE_GT_8",
            "HORIZON_INVALID"} <= codes(p)
    with pytest.raises(ProblemValidationError) as info:
        require_valid(p)
    assert len(info.value.issues) >= 5


def test_validate_asymmetric_weights():
    p = OcpProblem(A=np.zeros((2, 2)), B=np.eye(2), Q=[[1.0, 0.2], [0.0, 1.0]], R=np.eye(2),
                   f=PolyVectorField.zero(2), t0=0, tf=1, x0=[0, 0], xf=[1, 1])
    assert "Q_NOT_SYMMETRIC" in codes(p)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(A=[[np.nan]]),
        dict(B=[[np.inf]]),
        dict(Q=[[np.nan]]),
        dict(R=[[np.nan]]),
        dict(A=np.zeros((2, 3))),
        dict(B=np.zeros((2, 2))),
        dict(x0=[1.0, 2.0]),
        dict(R=np.eye(3)),
        dict(t0=np.nan),
        dict(f=PolyVectorField.zero(2)),
        dict(f=PolyVectorField(((Monomial(1.0, (1, 1)),),))),
        dict(f=PolyVectorField(((Monomial(0.0, (2,)),),))),
        dict(f=PolyVectorField(((Monomial(np.nan, (2,)),),))),
        dict(f=PolyVectorField(((Monomial(1.0, (-1,)),),))),
        dict(A=np.zeros((0, 0))),
        dict(A=np.zeros(3)),
    ],
)
def test_validate_is_total(kwargs):
    base = dict(A=[[0.0]], B=[[1.0]], Q=[[0.0]], R=[[1.0]], f=PolyVectorField.zero(1),
                t0=0.0, tf=1.0, x0=[1.0], xf=[0.0])
    base.update(kwargs)
    issues = validate(OcpProblem(**base))
    assert issues, "malformed problem must produce at least one issue"


def test_problem_equality():
    assert spacecraft_problem() == spacecraft_problem()
    assert spacecraft_problem() != spacecraft_problem(inertia=(1.0, 2.0, 3.0))
