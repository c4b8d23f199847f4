"""
Truncated power series in the embedding parameter p, and the order-n
forcing of the homotopy recursion.

A truncated series is a plain ndarray whose axis 0 indexes the power of p:
``s[k]`` is the coefficient of p**k.  Any trailing axes are batch axes (grid
samples, state components) and every operation acts pointwise on them, so a
whole trajectory of series is handled in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .errors import DimensionError, SequencingError
from .numerics import Trajectory
from .problem import Monomial, OcpProblem


@dataclass(frozen=True)
class SeriesTerm:
    order: int
    x: Trajectory
    lam: Trajectory


def _truncate(a, K: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[0] >= K + 1:
        return a[: K + 1]
    pad = np.zeros((K + 1 - a.shape[0],) + a.shape[1:])
    return np.concatenate([a, pad], axis=0)


def series_mul(a, b, K: int) -> np.ndarray:
    """Cauchy product of two truncated series, keeping powers 0..K."""
    a = _truncate(a, K)
    b = _truncate(b, K)
    shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
    c = np.zeros((K + 1,) + shape)
    for k in range(K + 1):
        for i in range(k + 1):
            c[k] += a[i] * b[k - i]
    return c


def series_pow(s, e: int, K: int) -> np.ndarray:
    s = _truncate(s, K)
    out = np.zeros_like(s)
    out[0] = 1.0
    for _ in range(e):
        out = series_mul(out, s, K)
    return out


def poly_on_series(monomials: Sequence[Monomial], states, K: int) -> np.ndarray:
    """Evaluate a sum of monomials on series-valued state variables.

    ``states`` has shape ``(K+1, ..., n)``: the last axis is the state
    component.  Returns a series of shape ``(K+1, ...)``.
    """
    states = _truncate(states, K)
    n = states.shape[-1]
    out = np.zeros(states.shape[:-1])
    powers: Dict[Tuple[int, int], np.ndarray] = {}
    for mono in monomials:
        if len(mono.exponents) != n:
            raise DimensionError(
                f"monomial has {len(mono.exponents)} exponents, state has {n} components"
            )
        term = None
        for j, e in enumerate(mono.exponents):
            if e == 0:
                continue
            if (j, e) not in powers:
                powers[(j, e)] = series_pow(states[..., j], e, K)
            term = powers[(j, e)] if term is None else series_mul(term, powers[(j, e)], K)
        if term is None:
            term = np.zeros_like(out)
            term[0] = 1.0
        out = out + mono.coefficient * term
    return out


def _last_coefficient(a, b, K: int) -> np.ndarray:
    """Coefficient of p**K in the product of two series."""
    return sum(a[i] * b[K - i] for i in range(K + 1))


def he_forcing(n: int, prior: Sequence[SeriesTerm], problem: OcpProblem) -> Trajectory:
    """Forcing of the order-``n`` linear subproblem, stacked as (state, costate).

    With x~ = sum_k x(k) p**k and lam~ likewise over the prior orders
    0..n-1, the state block is the p**(n-1) coefficient of f(x~) and the
    costate block is minus the p**(n-1) coefficient of J_f(x~)^T lam~
    (J_f(x~) lam~ when the problem's ``jacobian_transpose`` flag is off).
    """
    if n < 1:
        raise SequencingError(f"forcing is defined for orders >= 1, got {n}")
    orders = [t.order for t in prior]
    if orders != list(range(n)):
        raise SequencingError(f"order {n} needs prior orders 0..{n - 1}, got {orders}")
    grid = prior[0].x.grid
    if any(t.x.grid != grid or t.lam.grid != grid for t in prior):
        raise DimensionError("prior series terms live on different grids")

    K = n - 1
    xs = np.stack([t.x.values for t in prior])  # (K+1, P, nx)
    ls = np.stack([t.lam.values for t in prior])
    nx = xs.shape[-1]
    f = problem.f

    state = np.zeros((grid.size, nx))
    for i, comp in enumerate(f.components):
        if comp:
            state[:, i] = poly_on_series(comp, xs, K)[K]

    costate = np.zeros((grid.size, nx))
    jac = f.jacobian
    for i in range(nx):
        for j in range(nx):
            entry = jac.entries[i][j]
            if not entry:
                continue
            dfi_dxj = poly_on_series(entry, xs, K)
            if problem.jacobian_transpose:
                costate[:, j] += _last_coefficient(dfi_dxj, ls[..., i], K)
            else:
                costate[:, i] += _last_coefficient(dfi_dxj, ls[..., j], K)

    return Trajectory(grid, np.hstack([state, -costate]))
