"""
JSON problem files.

    {
      "name": "spacecraft",
      "n": 3, "m": 3,
      "A": [[...]], "B": [[...]], "Q": [[...]], "R": [[...]],
      "nonlinearity": [
        {"component": 0, "coefficient": -0.3307, "exponents": [0, 1, 1]},
        ...
      ],
      "x0": [...], "xf": [...], "t0": 0.0, "tf": 100.0,
      "jacobian_transpose": true,
      "solver": {"epsilon": 1e-12, "max_order": 10, "grid_intervals": 1000}
    }

Components are 0-based.  ``name``, ``jacobian_transpose`` and ``solver`` are
optional.  Floats are written with ``repr`` so every double round-trips.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .errors import HpmOcpError
from .hpm import HpmConfig
from .problem import Issue, Monomial, OcpProblem, PolyVectorField, validate

SOLVER_KEYS = ("epsilon", "max_order", "grid_intervals")


class ProblemFileError(HpmOcpError):
    """Syntax or content errors in a problem file, each with a location."""

    def __init__(self, path, issues: List[Issue]):
        self.path = str(path)
        self.issues = issues
        body = "\n".join(f"  {i}" for i in issues)
        super().__init__(f"{self.path}: {len(issues)} problem(s)\n{body}")


@dataclass
class SolverOverrides:
    epsilon: Optional[float] = None
    max_order: Optional[int] = None
    grid_intervals: Optional[int] = None

    def config(self, jacobian_transpose=None, **cli) -> HpmConfig:
        """Merge file overrides and command-line values (the latter win)."""
        kw = {k: getattr(self, k) for k in SOLVER_KEYS if getattr(self, k) is not None}
        kw.update({k: v for k, v in cli.items() if v is not None})
        return HpmConfig(jacobian_transpose=jacobian_transpose, **kw)


def _line_of(text: str, pattern: str, occurrence: int = 0) -> Optional[int]:
    matches = list(re.finditer(pattern, text))
    if occurrence >= len(matches):
        return None
    return text.count("\n", 0, matches[occurrence].start()) + 1


def _locate(text: str, field: str) -> str:
    """Turn a field path into ``field (line L)`` by scanning the raw text."""
    m = re.fullmatch(r"nonlinearity\[(\d+)\]", field)
    if m:
        start = text.find('"nonlinearity"')
        line = None
        if start >= 0:
            k = int(m.group(1))
            sub = text[start:]
            hit = _line_of(sub, r"\{", k)
            if hit is not None:
                line = text.count("\n", 0, start) + hit
        return f"{field} (line {line})" if line else field
    line = _line_of(text, r'"%s"\s*:' % re.escape(field))
    return f"{field} (line {line})" if line else field


def _array(doc, key, issues, ndim):
    if key not in doc:
        issues.append(Issue("MISSING_FIELD", f"required field {key!r} is missing", key))
        return None
    try:
        arr = np.array(doc[key], dtype=float)
    except (TypeError, ValueError):
        issues.append(Issue("BAD_VALUE", f"{key} must be a rectangular numeric array", key))
        return None
    if arr.ndim != ndim:
        kind = "vector" if ndim == 1 else "matrix"
        issues.append(Issue("DIMENSION_MISMATCH", f"{key} must be a {kind}, got shape {arr.shape}", key))
        return None
    return arr


def _number(doc, key, issues, default=None):
    if key not in doc:
        if default is not None:
            return default
        issues.append(Issue("MISSING_FIELD", f"required field {key!r} is missing", key))
        return None
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        issues.append(Issue("BAD_VALUE", f"{key} must be a number", key))
        return None
    return float(val)


def problem_from_dict(doc: Dict[str, Any]) -> Tuple[Optional[OcpProblem], SolverOverrides, List[Issue]]:
    """Build a problem from a decoded document; collect every issue found."""
    issues: List[Issue] = []
    if not isinstance(doc, dict):
        return None, SolverOverrides(), [Issue("BAD_VALUE", "top level must be an object")]

    A, B, Q, R = (_array(doc, k, issues, 2) for k in ("A", "B", "Q", "R"))
    x0, xf = (_array(doc, k, issues, 1) for k in ("x0", "xf"))
    t0 = _number(doc, "t0", issues, default=0.0)
    tf = _number(doc, "tf", issues)

    n = doc.get("n", None if A is None else A.shape[0])
    m = doc.get("m", None if B is None else B.shape[1])
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        issues.append(Issue("BAD_VALUE", f"n must be a positive integer, got {n!r}", "n"))
        n = None
    if m is not None and (not isinstance(m, int) or isinstance(m, bool) or m < 1):
        issues.append(Issue("BAD_VALUE", f"m must be a positive integer, got {m!r}", "m"))
        m = None
    if n is not None and A is not None and A.shape != (n, n):
        issues.append(Issue("DIMENSION_MISMATCH", f"A must be {n}x{n}, got {A.shape}", "A"))
    if n is not None and m is not None and B is not None and B.shape != (n, m):
        issues.append(Issue("DIMENSION_MISMATCH", f"B must be {n}x{m}, got {B.shape}", "B"))

    # (record index, monomial) per component, so issues can point back at the file
    components: List[List[Tuple[int, Monomial]]] = [[] for _ in range(n or 0)]
    records = doc.get("nonlinearity", [])
    if not isinstance(records, list):
        issues.append(Issue("BAD_VALUE", "nonlinearity must be a list of records", "nonlinearity"))
        records = []
    for k, rec in enumerate(records):
        loc = f"nonlinearity[{k}]"
        if not isinstance(rec, dict) or not {"component", "coefficient", "exponents"} <= rec.keys():
            issues.append(Issue("BAD_VALUE",
                                "record needs component, coefficient and exponents", loc))
            continue
        comp, coef, exps = rec["component"], rec["coefficient"], rec["exponents"]
        if not isinstance(comp, int) or isinstance(comp, bool) or n is None or not 0 <= comp < n:
            issues.append(Issue("DIMENSION_MISMATCH",
                                f"component {comp!r} is not a state index in 0..{(n or 0) - 1}", loc))
            continue
        if isinstance(coef, bool) or not isinstance(coef, (int, float)):
            issues.append(Issue("BAD_VALUE", "coefficient must be a number", loc))
            continue
        if not isinstance(exps, list) or not all(
                isinstance(e, int) and not isinstance(e, bool) for e in exps):
            issues.append(Issue("BAD_VALUE", "exponents must be a list of integers", loc))
            continue
        if len(exps) != n:
            issues.append(Issue("DIMENSION_MISMATCH",
                                f"monomial record {k} has {len(exps)} exponents, state has {n}", loc))
            continue
        components[comp].append((k, Monomial(float(coef), tuple(exps))))

    jt = doc.get("jacobian_transpose", True)
    if not isinstance(jt, bool):
        issues.append(Issue("BAD_VALUE", "jacobian_transpose must be true or false", "jacobian_transpose"))
        jt = True
    name = doc.get("name", "problem")
    if not isinstance(name, str):
        issues.append(Issue("BAD_VALUE", "name must be a string", "name"))
        name = "problem"

    overrides = SolverOverrides()
    solver = doc.get("solver", {})
    if not isinstance(solver, dict):
        issues.append(Issue("BAD_VALUE", "solver must be an object", "solver"))
        solver = {}
    for key in solver:
        if key not in SOLVER_KEYS:
            issues.append(Issue("UNKNOWN_FIELD", f"unknown solver setting {key!r}", key))
    if "epsilon" in solver:
        overrides.epsilon = _number(solver, "epsilon", issues)
    for key in ("max_order", "grid_intervals"):
        if key in solver:
            v = solver[key]
            if isinstance(v, bool) or not isinstance(v, int):
                issues.append(Issue("BAD_VALUE", f"{key} must be an integer", key))
            else:
                setattr(overrides, key, v)

    if any(v is None for v in (A, B, Q, R, x0, xf, t0, tf)):
        return None, overrides, issues

    field = PolyVectorField(tuple(tuple(m for _, m in comp) for comp in components))
    problem = OcpProblem(A=A, B=B, Q=Q, R=R, f=field,
                         t0=t0, tf=tf, x0=x0, xf=xf, jacobian_transpose=jt, name=name)
    record_of = [k for comp in components for k, _ in comp]
    seen = {(i.code, i.location) for i in issues}
    for issue in validate(problem):
        m = re.fullmatch(r"nonlinearity\[(\d+)\]", issue.location)
        if m:
            issue = Issue(issue.code, issue.message, f"nonlinearity[{record_of[int(m.group(1))]}]", issue.hint)
        if (issue.code, issue.location) not in seen:
            issues.append(issue)
    return (None if issues else problem), overrides, issues


def parse_problem_text(text: str, path="<string>") -> Tuple[OcpProblem, SolverOverrides]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(path, [Issue(
            "SYNTAX_ERROR", exc.msg, f"line {exc.lineno}, column {exc.colno}")]) from exc
    problem, overrides, issues = problem_from_dict(doc)
    if issues:
        located = [Issue(i.code, i.message, _locate(text, i.location) if i.location else "", i.hint)
                   for i in issues]
        raise ProblemFileError(path, located)
    return problem, overrides


def parse_problem(path) -> Tuple[OcpProblem, SolverOverrides]:
    """Read, parse and validate a problem file."""
    path = Path(path)
    return parse_problem_text(path.read_text(encoding="utf-8"), path)


def problem_to_dict(p: OcpProblem, overrides: Optional[SolverOverrides] = None) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "name": p.name,
        "n": p.n,
        "m": p.m,
        "A": p.A.tolist(),
        "B": p.B.tolist(),
        "Q": p.Q.tolist(),
        "R": p.R.tolist(),
        "nonlinearity": [
            {"component": i, "coefficient": m.coefficient, "exponents": list(m.exponents)}
            for i, m in p.f.monomials()
        ],
        "x0": p.x0.tolist(),
        "xf": p.xf.tolist(),
        "t0": p.t0,
        "tf": p.tf,
        "jacobian_transpose": p.jacobian_transpose,
    }
    if overrides is not None:
        solver = {k: getattr(overrides, k) for k in SOLVER_KEYS if getattr(overrides, k) is not None}
        if solver:
            doc["solver"] = solver
    return doc


def dump_problem(p: OcpProblem, overrides: Optional[SolverOverrides] = None) -> str:
    return json.dumps(problem_to_dict(p, overrides), indent=2) + "\n"


def write_problem(p: OcpProblem, path, overrides: Optional[SolverOverrides] = None) -> None:
    Path(path).write_text(dump_problem(p, overrides), encoding="utf-8")
