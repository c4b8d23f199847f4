"""
Command-line front end.

    hpm-ocp preset spacecraft --out spacecraft.json
    hpm-ocp validate --problem spacecraft.json
    hpm-ocp solve    --problem spacecraft.json --out run/
    hpm-ocp compare  --problem spacecraft.json --out run/

Exit codes: 0 converged, 1 input or solver error, 2 series order cap reached
without meeting the tolerance, 3 shooting oracle did not converge (compare).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .errors import HpmOcpError
from .hpm import HpmConfig, HpmSolution, HpmSolveError, evaluate_cost, solve_hpm
from .oracle import shooting_control, shooting_solve
from .presets import spacecraft_problem
from .problem import OcpProblem
from .problem_file import ProblemFileError, dump_problem, parse_problem
from .tpbvp import residual_norm

log = logging.getLogger("hpm_ocp")

EXIT_OK, EXIT_ERROR, EXIT_MAX_ORDER, EXIT_ORACLE = 0, 1, 2, 3

PRESETS = {"spacecraft": spacecraft_problem}


class _Timer:
    def __init__(self):
        self.ms: Dict[str, float] = {}

    @contextmanager
    def phase(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.ms[name] = self.ms.get(name, 0.0) + 1e3 * (time.perf_counter() - start)


def _fmt(v: float) -> str:
    return f"{v:.16e}"


def write_trajectories_csv(path, p: OcpProblem, sol: HpmSolution) -> None:
    x = sol.state_sum().values
    lam = sol.costate_sum().values
    u = sol.control.values
    xs = sol.simulated_state.values
    n, m = p.n, p.m
    header = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"lambda{i + 1}" for i in range(n)]
              + [f"u{i + 1}" for i in range(m)] + [f"x_sim{i + 1}" for i in range(n)])
    rows = np.hstack([sol.grid.times[:, None], x, lam, u, xs])
    _write_csv(path, header, rows)


def _write_csv(path, header: List[str], rows: np.ndarray) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _summary(p: OcpProblem, cfg: HpmConfig, sol: Optional[HpmSolution], timer: _Timer, exit_code: int,
             oracle=None, error: Optional[str] = None) -> dict:
    out = {
        "problem_name": p.name,
        "grid_intervals": cfg.grid_intervals,
        "epsilon": cfg.epsilon,
        "achieved_order": sol.achieved_order if sol else None,
        "converged": sol.converged if sol else False,
        "cost_history": list(sol.cost_history) if sol else [],
        "cost_deltas": sol.cost_deltas if sol else [],
        "residuals": [],
        "timings_ms": timer.ms,
    }
    if sol is not None and sol.terms:
        with timer.phase("residuals"):
            for M in range(len(sol.terms)):
                r1, r2 = residual_norm(p, sol.state_sum(M), sol.costate_sum(M))
                out["residuals"].append({"order": M, "state": r1, "costate": r2})
    if oracle is not None:
        out["oracle"] = oracle
    if error is not None:
        out["error"] = error
    out["exit_code"] = exit_code
    return out


def _check_writable(out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(dir=out):
        pass
    return out


def _write_summary(out: Path, summary: dict) -> None:
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")


def _prepare(output_dir):
    try:
        out = _check_writable(output_dir)
    except OSError as exc:
        print(f"error: output directory {output_dir} is not writable: {exc}", file=sys.stderr)
        return None
    return out


def _run_series(problem, config, timer):
    try:
        with timer.phase("solve"):
            return solve_hpm(problem, config), None
    except HpmSolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.partial, str(exc)
    except HpmOcpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None, str(exc)


def run_solve(problem: OcpProblem, config: HpmConfig, output_dir) -> int:
    out = _prepare(output_dir)
    if out is None:
        return EXIT_ERROR
    problem = config.apply(problem)
    timer = _Timer()
    sol, error = _run_series(problem, config, timer)
    if error is not None:
        _write_summary(out, _summary(problem, config, sol, timer, EXIT_ERROR, error=error))
        return EXIT_ERROR

    code = EXIT_OK if sol.converged else EXIT_MAX_ORDER
    with timer.phase("write"):
        write_trajectories_csv(out / "trajectories.csv", problem, sol)
    _write_summary(out, _summary(problem, config, sol, timer, code))
    _report(sol)
    if code == EXIT_MAX_ORDER:
        print(f"warning: order cap {config.max_order} reached before |dJ| < {config.epsilon:g}",
              file=sys.stderr)
    return code


def run_compare(problem: OcpProblem, config: HpmConfig, output_dir) -> int:
    out = _prepare(output_dir)
    if out is None:
        return EXIT_ERROR
    problem = config.apply(problem)
    timer = _Timer()
    sol, error = _run_series(problem, config, timer)
    if error is not None:
        _write_summary(out, _summary(problem, config, sol, timer, EXIT_ERROR, error=error))
        return EXIT_ERROR

    with timer.phase("oracle"):
        report = shooting_solve(problem, sol.grid, sol.costate_sum().initial)
    oracle = {"converged": report.converged, "iterations": report.iterations,
              "sup_state_deviation": None, "cost_gap": None}
    if report.converged:
        with timer.phase("oracle"):
            u_shoot = shooting_control(problem, report)
            _, J_shoot = evaluate_cost(problem, u_shoot)
        oracle["sup_state_deviation"] = float(np.max(np.abs(report.x.values - sol.state_sum().values)))
        oracle["cost_gap"] = abs(J_shoot - sol.cost)
        oracle["cost"] = J_shoot
        header = (["t"] + [f"x{i + 1}" for i in range(problem.n)]
                  + [f"lambda{i + 1}" for i in range(problem.n)] + [f"u{i + 1}" for i in range(problem.m)])
        rows = np.hstack([sol.grid.times[:, None], report.x.values, report.lam.values, u_shoot.values])
        _write_csv(out / "oracle_trajectories.csv", header, rows)
    else:
        oracle["message"] = report.message
        oracle["final_residual"] = [float(v) if np.isfinite(v) else None for v in report.final_residual]
        print(f"oracle: shooting did not converge ({report.message})", file=sys.stderr)

    if not report.converged:
        code = EXIT_ORACLE
    else:
        code = EXIT_OK if sol.converged else EXIT_MAX_ORDER
    with timer.phase("write"):
        write_trajectories_csv(out / "trajectories.csv", problem, sol)
    _write_summary(out, _summary(problem, config, sol, timer, code, oracle=oracle))
    _report(sol)
    if report.converged:
        print(f"oracle: {report.iterations} Newton iterations, "
              f"state deviation {oracle['sup_state_deviation']:.3e}, cost gap {oracle['cost_gap']:.3e}")
    return code


def _report(sol: HpmSolution) -> None:
    for M, J in enumerate(sol.cost_history):
        delta = "" if M == 0 else f"  |dJ| = {abs(J - sol.cost_history[M - 1]):.3e}"
        print(f"order {M}: J = {J:.12g}{delta}")
    state = "converged" if sol.converged else "not converged"
    print(f"{state} at order {sol.achieved_order}, J = {sol.cost:.10g}")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hpm-ocp",
        description="Suboptimal open-loop control of polynomial systems by homotopy perturbation.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p, needs_out=True):
        p.add_argument("--problem", required=True, help="problem file (JSON)")
        p.add_argument("--epsilon", type=float, help="stop when |J(M) - J(M-1)| < epsilon")
        p.add_argument("--max-order", type=int, help="highest series order to compute")
        p.add_argument("--grid", type=int, help="number of grid intervals N")
        p.add_argument("--jacobian-transpose", type=_bool, metavar="BOOL",
                       help="use (df/dx)^T in the costate equation (default: problem setting)")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")

    solver_flags(sub.add_parser("solve", help="run the series solver"))
    solver_flags(sub.add_parser("compare", help="run the series solver and the shooting oracle"))
    solver_flags(sub.add_parser("validate", help="parse and validate a problem file"), needs_out=False)
    preset = sub.add_parser("preset", help="write a bundled problem file")
    preset.add_argument("name", choices=sorted(PRESETS))
    preset.add_argument("--out", help="destination file (default: stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "preset":
        text = dump_problem(PRESETS[args.name]())
        if args.out:
            try:
                Path(args.out).write_text(text, encoding="utf-8")
            except OSError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_ERROR
        else:
            sys.stdout.write(text)
        return EXIT_OK

    try:
        problem, overrides = parse_problem(args.problem)
        config = overrides.config(
            jacobian_transpose=args.jacobian_transpose,
            epsilon=args.epsilon, max_order=args.max_order, grid_intervals=args.grid,
        )
    except ProblemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, HpmOcpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    if args.command == "validate":
        print(f"{args.problem}: valid (n={problem.n}, m={problem.m}, "
              f"{sum(1 for _ in problem.f.monomials())} monomials)")
        return EXIT_OK
    if args.command == "solve":
        return run_solve(problem, config, args.out)
    return run_compare(problem, config, args.out)


if __name__ == "__main__":
    sys.exit(main())
