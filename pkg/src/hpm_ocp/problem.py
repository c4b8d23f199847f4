"""
Problem class: input-affine dynamics with a polynomial nonlinearity and a
quadratic running cost, with both end states fixed.

    x' = A x + B u + f(x),   x(t0) = x0,  x(tf) = xf
    J  = 1/2 int (x'Qx + u'Ru) dt

f is stored as a sparse list of monomials per component.  Only monomials of
total degree 2..8 are allowed so that f(0) = 0 and the linear part of the
dynamics lives entirely in A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np

from .errors import DimensionError, ProblemValidationError
from .numerics import check_pd, check_psd

MAX_DEGREE = 8


@dataclass(frozen=True)
class Monomial:
    coefficient: float
    exponents: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(int(e) for e in self.exponents))
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def __call__(self, x) -> float:
        return self.coefficient * math.prod(xi**e for xi, e in zip(x, self.exponents))


class _CompiledTerms:
    """Monomials flattened into arrays for vectorised evaluation.

    ``slot[k]`` is the flat output index the k-th monomial adds into.
    """

    def __init__(self, entries: Sequence[Sequence[Monomial]], n: int):
        coef, exps, slot = [], [], []
        for i, monos in enumerate(entries):
            for m in monos:
                coef.append(m.coefficient)
                exps.append(m.exponents)
                slot.append(i)
        self.n = n
        self.size = len(entries)
        self.coef = np.array(coef, dtype=float)
        self.exps = np.array(exps, dtype=float).reshape(len(coef), n)
        self.incidence = np.zeros((len(coef), self.size))
        self.incidence[np.arange(len(coef)), slot] = 1.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionError(f"expected {self.n} state components, got {x.shape[-1]}")
        if self.coef.size == 0:
            return np.zeros(x.shape[:-1] + (self.size,))
        terms = self.coef * np.prod(x[..., None, :] ** self.exps, axis=-1)
        return terms @ self.incidence


@dataclass(frozen=True)
class PolyVectorField:
    """``components[i]`` lists the monomials summed into f_i."""

    components: Tuple[Tuple[Monomial, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "components", tuple(tuple(c) for c in self.components)
        )

    @classmethod
    def zero(cls, n: int) -> "PolyVectorField":
        return cls(tuple(() for _ in range(n)))

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def is_zero(self) -> bool:
        return not any(self.components)

    @cached_property
    def _compiled(self) -> _CompiledTerms:
        return _CompiledTerms(self.components, self.dim)

    @cached_property
    def jacobian(self) -> "PolyMatrixField":
        return differentiate(self)

    def __call__(self, x) -> np.ndarray:
        return self._compiled(x)

    def scaled(self, alpha: float) -> "PolyVectorField":
        return PolyVectorField(
            tuple(tuple(Monomial(alpha * m.coefficient, m.exponents) for m in c)
                  for c in self.components)
        )

    def monomials(self):
        """Yield ``(component, monomial)`` pairs."""
        for i, comp in enumerate(self.components):
            for m in comp:
                yield i, m


@dataclass(frozen=True)
class PolyMatrixField:
    """``entries[i][j]`` lists the monomials of df_i/dx_j."""

    entries: Tuple[Tuple[Tuple[Monomial, ...], ...], ...]

    @property
    def dim(self) -> int:
        return len(self.entries)

    @cached_property
    def _compiled(self) -> _CompiledTerms:
        n = self.dim
        return _CompiledTerms([self.entries[i][j] for i in range(n) for j in range(n)], n)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = self._compiled(x)
        return flat.reshape(x.shape[:-1] + (self.dim, self.dim))


def eval_field(f: PolyVectorField, x) -> np.ndarray:
    """Evaluate f at ``x``; ``x`` may carry leading batch axes."""
    return f(x)


def differentiate(f: PolyVectorField) -> PolyMatrixField:
    n = f.dim
    rows = []
    for comp in f.components:
        row = []
        for j in range(n):
            entry = []
            for m in comp:
                e = m.exponents[j] if j < len(m.exponents) else 0
                if e == 0:
                    continue
                ex = list(m.exponents)
                ex[j] -= 1
                entry.append(Monomial(m.coefficient * e, tuple(ex)))
            row.append(tuple(entry))
        rows.append(tuple(row))
    return PolyMatrixField(tuple(rows))


@dataclass(frozen=True, eq=False)
class OcpProblem:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    f: PolyVectorField
    t0: float
    tf: float
    x0: np.ndarray
    xf: np.ndarray
    jacobian_transpose: bool = True
    name: str = "problem"

    def __post_init__(self):
        for key in ("A", "B", "Q", "R", "x0", "xf"):
            arr = np.array(getattr(self, key), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, key, arr)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "tf", float(self.tf))
        object.__setattr__(self, "jacobian_transpose", bool(self.jacobian_transpose))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def __eq__(self, other):
        if not isinstance(other, OcpProblem):
            return NotImplemented
        arrays = ("A", "B", "Q", "R", "x0", "xf")
        return (
            all(np.array_equal(getattr(self, k), getattr(other, k)) for k in arrays)
            and self.f == other.f
            and self.t0 == other.t0
            and self.tf == other.tf
            and self.jacobian_transpose == other.jacobian_transpose
            and self.name == other.name
        )

    __hash__ = None


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    location: str = ""
    hint: str = ""

    def __str__(self):
        s = f"{self.code}"
        if self.location:
            s += f" at {self.location}"
        s += f": {self.message}"
        if self.hint:
            s += f" (hint: {self.hint})"
        return s


def _finite(arr) -> bool:
    return bool(np.all(np.isfinite(arr)))


def validate(p: OcpProblem) -> List[Issue]:
    """Check a problem and return every violation found (empty when valid).

    Never raises on malformed numeric content.
    """
    issues: List[Issue] = []

    def add(code, message, location="", hint=""):
        issues.append(Issue(code, message, location, hint))

    shapes = {k: np.shape(getattr(p, k)) for k in ("A", "B", "Q", "R", "x0", "xf")}
    for key in ("A", "B", "Q", "R", "x0", "xf"):
        try:
            if not _finite(getattr(p, key)):
                add("NONFINITE_VALUE", f"{key} contains NaN or infinity", key)
        except TypeError:
            add("NONFINITE_VALUE", f"{key} is not numeric", key)

    a_shape = shapes["A"]
    if len(a_shape) != 2 or a_shape[0] != a_shape[1]:
        add("DIMENSION_MISMATCH", f"A must be square, got shape {a_shape}", "A")
        return issues
    n = a_shape[0]
    b_shape = shapes["B"]
    if len(b_shape) != 2 or b_shape[0] != n or b_shape[1] < 1:
        add("DIMENSION_MISMATCH", f"B must be {n}xm with m >= 1, got shape {b_shape}", "B")
        m = None
    else:
        m = b_shape[1]
    if shapes["Q"] != (n, n):
        add("DIMENSION_MISMATCH", f"Q must be {n}x{n}, got shape {shapes['Q']}", "Q")
    if m is not None and shapes["R"] != (m, m):
        add("DIMENSION_MISMATCH", f"R must be {m}x{m}, got shape {shapes['R']}", "R")
    for key in ("x0", "xf"):
        if shapes[key] != (n,):
            add("DIMENSION_MISMATCH", f"{key} must have length {n}, got shape {shapes[key]}", key)

    _check_weight(p.Q, "Q", n, semidefinite=True, add=add)
    if m is not None:
        _check_weight(p.R, "R", m, semidefinite=False, add=add)

    if not (math.isfinite(p.t0) and math.isfinite(p.tf)) or p.tf <= p.t0:
        add("HORIZON_INVALID", f"need finite t0 < tf, got t0={p.t0}, tf={p.tf}", "tf")

    if p.f.dim != n:
        add("DIMENSION_MISMATCH", f"nonlinearity has {p.f.dim} components, state has {n}", "f")
    for k, (i, mono) in enumerate(p.f.monomials()):
        loc = f"nonlinearity[{k}]"
        if len(mono.exponents) != n:
            add("DIMENSION_MISMATCH",
                f"monomial in component {i} has {len(mono.exponents)} exponents, state has {n}", loc)
            continue
        if any(e < 0 for e in mono.exponents):
            add("MONOMIAL_NEGATIVE_EXPONENT", f"negative exponent {mono.exponents}", loc)
            continue
        if not math.isfinite(mono.coefficient) or mono.coefficient == 0.0:
            add("MONOMIAL_BAD_COEFFICIENT",
                f"coefficient must be finite and nonzero, got {mono.coefficient}", loc)
        if mono.degree < 2:
            add("MONOMIAL_DEGREE_LT_2",
                f"monomial of degree {mono.degree} in component {i}", loc,
                "fold linear terms into A and drop constants")
        elif mono.degree > MAX_DEGREE:
            add("MONOMIAL_DEGREE_GT_8",
                f"monomial of degree {mono.degree} exceeds {MAX_DEGREE}", loc)
    return issues


def _check_weight(M, key, size, semidefinite, add):
    if np.shape(M) != (size, size) or not _finite(M):
        return
    M = np.asarray(M, dtype=float)
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * scale:
        add(f"{key}_NOT_SYMMETRIC", f"{key} is not symmetric", key)
        return
    if semidefinite and not check_psd(M):
        add(f"{key}_NOT_PSD", f"{key} is not positive semidefinite", key)
    if not semidefinite and not check_pd(M):
        add(f"{key}_NOT_PD", f"{key} is not positive definite", key)


def require_valid(p: OcpProblem) -> OcpProblem:
    issues = validate(p)
    if issues:
        raise ProblemValidationError(issues)
    return p
