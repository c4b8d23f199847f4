"""
Dense linear algebra, matrix exponential, fixed-step integration and quadrature.

Everything in the package samples time on a *staggered grid*: the N+1 nodes
t0, t0+h, ..., tf plus the N midpoints between them, 2N+1 points in total.
Sample ``2k`` is node ``k`` and sample ``2k+1`` is the midpoint after it, so a
classical RK4 step from node to node finds its forcing at t, t+h/2 and t+h
without any interpolation, and composite Simpson uses node-midpoint-node
triples directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, SingularMatrixError, ValidationError

__all__ = [
    "Grid",
    "Trajectory",
    "mat_exp",
    "solve_linear",
    "rk4_march",
    "rk4_integrate",
    "simpson_quadrature",
    "check_pd",
    "check_psd",
]


@dataclass(frozen=True)
class Grid:
    t0: float
    tf: float
    intervals: int

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.tf)) or self.tf <= self.t0:
            raise ValidationError(f"grid needs finite t0 < tf, got [{self.t0}, {self.tf}]")
        if int(self.intervals) != self.intervals or self.intervals < 2:
            raise ValidationError(f"grid needs at least 2 intervals, got {self.intervals}")
        object.__setattr__(self, "intervals", int(self.intervals))

    @property
    def step(self) -> float:
        return (self.tf - self.t0) / self.intervals

    @property
    def size(self) -> int:
        """Number of sample points (nodes and midpoints)."""
        return 2 * self.intervals + 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + 0.5 * self.step * np.arange(self.size)

    @property
    def nodes(self) -> np.ndarray:
        return self.times[::2]


@dataclass(frozen=True)
class Trajectory:
    """A vector-valued function of time sampled on every point of a grid.

    ``values`` has shape ``(grid.size, dim)``.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.size:
            raise DimensionError(
                f"trajectory needs {self.grid.size} samples, got array of shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("trajectory contains non-finite samples")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: Grid, dim: int) -> "Trajectory":
        return cls(grid, np.zeros((grid.size, dim)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "Trajectory":
        """Sample ``fn`` (vectorised over time) on the grid."""
        return cls(grid, np.asarray(fn(grid.times), dtype=float))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def initial(self) -> np.ndarray:
        return self.values[0]

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def __add__(self, other: "Trajectory") -> "Trajectory":
        if other.grid != self.grid:
            raise DimensionError("cannot add trajectories on different grids")
        return Trajectory(self.grid, self.values + other.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def _square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    return M


def mat_exp(M, t: float = 1.0) -> np.ndarray:
    """Return ``exp(M t)`` by scaling and squaring around a Taylor core.

    The argument is halved until its infinity norm is at most 0.5, the
    exponential of the scaled matrix is summed as a Taylor series until the
    terms stop contributing, and the result is squared back.
    """
    M = _square(M)
    n = M.shape[0]
    X = M * float(t)
    norm = np.linalg.norm(X, np.inf)
    squarings = 0
    if norm > 0.5:
        squarings = int(math.ceil(math.log2(norm / 0.5)))
        X = X / 2.0**squarings

    E = np.eye(n)
    term = np.eye(n)
    # ||X|| <= 0.5, so 0.5**k / k! drops below 1e-20 by k = 20
    for k in range(1, 30):
        term = term @ X / k
        E = E + term
        if np.linalg.norm(term, np.inf) <= 1e-18 * np.linalg.norm(E, np.inf):
            break
    for _ in range(squarings):
        E = E @ E
    return E


def solve_linear(M, rhs) -> np.ndarray:
    """Gaussian elimination with partial pivoting.

    Raises SingularMatrixError when a pivot falls below 1e-13 times the
    infinity norm of ``M``.
    """
    A = _square(M).copy()
    b = np.array(rhs, dtype=float)
    n = A.shape[0]
    if b.shape[0] != n:
        raise DimensionError(f"rhs has length {b.shape[0]}, matrix is {n}x{n}")
    scale = np.linalg.norm(A, np.inf)
    tol = 1e-13 * scale
    if scale == 0.0:
        raise SingularMatrixError("matrix is identically zero")

    for col in range(n):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[piv, col]) <= tol:
            raise SingularMatrixError(
                f"pivot {A[piv, col]:.3e} in column {col} below threshold {tol:.3e}"
            )
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        factors = A[col + 1:, col] / A[col, col]
        A[col + 1:, col:] -= np.outer(factors, A[col, col:])
        b[col + 1:] -= np.multiply.outer(factors, b[col])

    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - A[row, row + 1:] @ x[row + 1:]) / A[row, row]
    return x


def rk4_march(
    rhs: Callable[[np.ndarray, np.ndarray], np.ndarray],
    z0,
    grid: Grid,
    forcing: Optional[np.ndarray] = None,
    midpoints: bool = True,
    guard: Optional[Callable[[np.ndarray, int], None]] = None,
) -> np.ndarray:
    """Classical RK4 over the staggered grid for ``z' = rhs(z, g(t))``.

    ``forcing`` holds one sample of g per grid point (shape ``(grid.size, k)``)
    or is None for autonomous systems.  ``z0`` may carry leading batch axes;
    ``rhs`` must broadcast over them.

    Node values come from full steps of size h.  Each midpoint value comes from
    a separate half step taken from the preceding node; that half step needs
    g at t+h/4, which is taken from the quadratic through the three samples of
    the interval.  Midpoint values are never fed back into the march.

    Returns an array of shape ``(grid.size, *z0.shape)``.  With
    ``midpoints=False`` the midpoint rows are left as NaN.
    ``guard(z, k)`` is called after every node step.
    """
    z = np.array(z0, dtype=float)
    h = grid.step
    N = grid.intervals
    out = np.full((grid.size,) + z.shape, np.nan)
    out[0] = z
    if forcing is None:
        g = np.zeros((grid.size, 0))
    else:
        g = np.asarray(forcing, dtype=float)
        if g.ndim == 1:
            g = g[:, None]
        if g.shape[0] != grid.size:
            raise DimensionError(
                f"forcing has {g.shape[0]} samples, grid expects {grid.size}"
            )

    for k in range(N):
        g0, gm, g1 = g[2 * k], g[2 * k + 1], g[2 * k + 2]
        k1 = rhs(z, g0)
        if midpoints:
            s = 0.5 * h
            gq = 0.375 * g0 + 0.75 * gm - 0.125 * g1
            m2 = rhs(z + 0.5 * s * k1, gq)
            m3 = rhs(z + 0.5 * s * m2, gq)
            m4 = rhs(z + s * m3, gm)
            out[2 * k + 1] = z + (s / 6.0) * (k1 + 2.0 * m2 + 2.0 * m3 + m4)
        k2 = rhs(z + 0.5 * h * k1, gm)
        k3 = rhs(z + 0.5 * h * k2, gm)
        k4 = rhs(z + h * k3, g1)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[2 * k + 2] = z
        if guard is not None:
            guard(z, k + 1)
    return out


def rk4_integrate(H, g: Optional["Trajectory"], z0, grid: Grid, direction: str = "forward") -> Trajectory:
    """Integrate the linear system ``z' = H z + g(t)`` on ``grid``.

    ``g`` may be None for the homogeneous system.  With ``direction="backward"``
    ``z0`` is the value at ``tf`` and the system is marched towards ``t0``.
    """
    H = _square(H)
    d = H.shape[0]
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (d,):
        raise DimensionError(f"initial value has shape {z0.shape}, system is {d}-dimensional")
    if g is None:
        gv = np.zeros((grid.size, d))
    else:
        if g.grid != grid:
            raise DimensionError("forcing trajectory lives on a different grid")
        if g.dim != d:
            raise DimensionError(f"forcing has dimension {g.dim}, system is {d}-dimensional")
        gv = g.values

    if direction == "forward":
        values = rk4_march(lambda z, f: H @ z + f, z0, grid, gv)
    elif direction == "backward":
        # march s = tf - t forward: dz/ds = -(H z + g)
        values = rk4_march(lambda z, f: -(H @ z + f), z0, grid, gv[::-1])[::-1]
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return Trajectory(grid, values)


def simpson_quadrature(values) -> float:
    """Composite Simpson integral of a scalar trajectory over its grid."""
    if isinstance(values, Trajectory):
        grid, v = values.grid, values.values
        if v.shape[1] != 1:
            raise DimensionError(f"quadrature expects a scalar trajectory, got dim {v.shape[1]}")
        v = v[:, 0]
    else:
        raise TypeError("simpson_quadrature expects a Trajectory")
    h = grid.step
    return float(h / 6.0 * (v[0:-1:2].sum() + 4.0 * v[1::2].sum() + v[2::2].sum()))


def _symmetric(M, what="matrix") -> np.ndarray:
    M = _square(M)
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * scale:
        raise ValidationError(f"{what} is not symmetric")
    return 0.5 * (M + M.T)


def check_pd(M) -> bool:
    """True when the symmetric matrix ``M`` admits a Cholesky factorisation."""
    M = _symmetric(M)
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return False
    return True


def check_psd(M) -> bool:
    """True when ``M + delta I`` is positive definite, delta = 1e-12 max(1, ||M||_inf)."""
    M = _symmetric(M)
    delta = 1e-12 * max(1.0, float(np.linalg.norm(M, np.inf)))
    try:
        np.linalg.cholesky(M + delta * np.eye(M.shape[0]))
    except np.linalg.LinAlgError:
        return False
    return True
