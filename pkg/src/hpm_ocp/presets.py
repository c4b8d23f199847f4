"""Built-in benchmark problems."""

import numpy as np

from .problem import Monomial, OcpProblem, PolyVectorField

SPACECRAFT_INERTIA = (86.24, 85.07, 113.59)  # kg m^2


def spacecraft_problem(inertia=SPACECRAFT_INERTIA) -> OcpProblem:
    """Rest-to-rest detumbling of a rigid asymmetric spacecraft.

    Euler's equations for the body rates, torque on every axis, minimum
    control energy over 100 s, from (0.01, 0.005, 0.001) rad/s to rest.
    """
    I1, I2, I3 = inertia
    f = PolyVectorField((
        (Monomial(-(I3 - I2) / I1, (0, 1, 1)),),
        (Monomial(-(I1 - I3) / I2, (1, 0, 1)),),
        (Monomial(-(I2 - I1) / I3, (1, 1, 0)),),
    ))
    return OcpProblem(
        A=np.zeros((3, 3)),
        B=np.diag([1.0 / I1, 1.0 / I2, 1.0 / I3]),
        Q=np.zeros((3, 3)),
        R=np.eye(3),
        f=f,
        t0=0.0,
        tf=100.0,
        x0=np.array([0.01, 0.005, 0.001]),
        xf=np.zeros(3),
        name="spacecraft",
    )
