"""Command-line harness: solve, converge and noether subcommands.

All output files are UTF-8 CSV with LF line endings, '.' decimal points,
'#' comment lines and floats printed with 17 significant digits, which
round-trips doubles exactly.  Runs are deterministic: the same arguments
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from .frac_cauchy import FixedPointDivergenceError, FixedPointOpts
from .gl_ops import TimeSeq
from .noether import conserved_quantity
from .pontryagin import (ControlUpdateError, SweepDivergenceError, SweepOpts,
                         solve_pontryagin)
from .problems import EXAMPLES, build_example
from .reference import (DegenerateDataError, convergence_order,
                        lq_exact_control, max_control_error,
                        solved_example_exact_control)

__all__ = ["RunConfig", "run_solve", "run_converge", "run_noether", "main", "entry"]


class UnsupportedReferenceError(ValueError):
    """No closed-form reference exists for the requested combination."""


@dataclass
class RunConfig:
    example: str
    alpha: float = 1.0
    n: int = 100
    n_list: tuple = ()
    out: str = ""
    tol_stat: float = 1e-9
    tol_control: float = 1e-9
    max_outer: int = 200
    relax: float = 1.0
    self_test: bool = False
    zero_generator: bool = False


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _sweep_opts(cfg: RunConfig) -> SweepOpts:
    return SweepOpts(tol_stationarity=cfg.tol_stat, tol_control=cfg.tol_control,
                     max_outer_iters=cfg.max_outer, relaxation=cfg.relax,
                     inner=FixedPointOpts())


def _solve(cfg: RunConfig, n: int):
    problem = build_example(cfg.example, cfg.alpha, n)
    return solve_pontryagin(problem, opts=_sweep_opts(cfg)), problem


def run_solve(cfg: RunConfig) -> int:
    """Solve one instance and write the k, t, u, q, p table."""
    solution, problem = _solve(cfg, cfg.n)
    grid = problem.grid
    header = (["k", "t"]
              + [f"u_{j + 1}" for j in range(problem.m)]
              + [f"q_{j + 1}" for j in range(problem.d)]
              + [f"p_{j + 1}" for j in range(problem.d)])
    lines = [",".join(header)]
    for k in range(grid.n + 1):
        cells = [str(k), _fmt(grid.times[k])]
        cells += [_fmt(v) for v in solution.U.values[k]]
        cells += [_fmt(v) for v in solution.Q.values[k]]
        cells += [_fmt(v) for v in solution.P.values[k]]
        lines.append(",".join(cells))
    _write_csv(cfg.out, lines)
    print(f"stationarity_residual={_fmt(solution.stationarity_residual)}")
    print(f"cost={_fmt(solution.cost)}")
    print(f"outer_iters={solution.outer_iters}")
    return 0


def _reference_for(cfg: RunConfig):
    if cfg.example == "solved":
        return lambda t: solved_example_exact_control(cfg.alpha, t)
    if cfg.example == "lq":
        if cfg.alpha != 1.0:
            raise UnsupportedReferenceError(
                "the quadratic benchmark has a closed form at order 1 only; "
                "use --alpha 1 or --example solved")
        return lq_exact_control
    raise UnsupportedReferenceError(
        f"no closed-form reference for example {cfg.example!r}")


def run_converge(cfg: RunConfig) -> int:
    """Solve a list of grids against the closed form, fit the order.

    Self-test mode replaces the closed form by the numerical control
    itself, so every error is zero and the fit must come out degenerate.
    """
    exact = None if cfg.self_test else _reference_for(cfg)
    pairs = []
    for n in sorted(cfg.n_list):
        solution, problem = _solve(cfg, n)
        if cfg.self_test:
            u = solution.U
            err = max_control_error(u, lambda t, u=u, g=problem.grid:
                                    u.values[g.index_of(t)], problem.grid)
        else:
            err = max_control_error(solution.U, exact, problem.grid)
        pairs.append((n, problem.grid.h, err))

    lines = ["N,h,max_error,pairwise_order"]
    try:
        report = convergence_order([(h, e) for _, h, e in pairs])
        orders = ("",) + tuple(_fmt(o) for o in report.pairwise_orders)
        rows = report.rows
        tail = f"# fitted_order={_fmt(report.fitted_order)}"
        fitted_msg = f"fitted_order={_fmt(report.fitted_order)}"
    except DegenerateDataError:
        rows = [(n, h, e) for n, h, e in pairs]
        orders = ("",) * len(rows)
        tail = "# fitted_order=degenerate"
        fitted_msg = "fitted_order=degenerate"
    for (n, h, e), order in zip(rows, orders):
        lines.append(",".join([str(n), _fmt(h), _fmt(e), order]))
    lines.append(tail)
    _write_csv(cfg.out, lines)
    print(fitted_msg)
    return 0


def run_noether(cfg: RunConfig) -> int:
    """Evaluate the candidate invariant along a rotation-example solution."""
    if cfg.example != "rotation":
        raise ValueError("the invariant is wired to the rotation example; "
                         "pass --example rotation")
    solution, problem = _solve(cfg, cfg.n)
    grid = problem.grid
    q = solution.Q.values
    if cfg.zero_generator:
        gen = TimeSeq.zeros(grid.n, problem.d)
    else:
        gen = TimeSeq(np.stack([[-q[k, 1], q[k, 0]] for k in range(grid.n + 1)]))
    inv = conserved_quantity(cfg.alpha, grid, gen, solution.P)

    lines = ["k,t,I_k"]
    for k in range(grid.n + 1):
        lines.append(",".join([str(k), _fmt(grid.times[k]), _fmt(inv.values[k, 0])]))
    _write_csv(cfg.out, lines)
    iv = inv.values[:, 0]
    print(f"max_drift={_fmt(np.max(np.abs(iv - iv[0])))}")
    print(f"max_abs={_fmt(np.max(np.abs(iv)))}")
    return 0


def _parse_n_list(text: str) -> tuple:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty N list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracoc",
        description="Variational integrator runs for fractional optimal control")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, default_out: str) -> None:
        p.add_argument("--example", required=True, choices=sorted(EXAMPLES))
        p.add_argument("--alpha", type=float, default=1.0,
                       help="fractional order in (0, 1]")
        p.add_argument("--out", default=default_out, help="output CSV path")
        p.add_argument("--tol-stat", type=float, default=1e-9)
        p.add_argument("--tol-control", type=float, default=1e-9)
        p.add_argument("--max-outer", type=int, default=200)
        p.add_argument("--relax", type=float, default=1.0)

    p_solve = sub.add_parser("solve", help="solve one instance, write u/q/p table")
    add_common(p_solve, "solve.csv")
    p_solve.add_argument("--n", type=int, default=100)

    p_conv = sub.add_parser("converge", help="error-vs-h study against a closed form")
    add_common(p_conv, "converge.csv")
    p_conv.add_argument("--n-list", type=_parse_n_list, required=True,
                        help="comma-separated grid sizes, e.g. 25,50,100")
    p_conv.add_argument("--self-test", action="store_true",
                        help="compare the solver with itself; all errors zero")

    p_noe = sub.add_parser("noether", help="evaluate the conserved sequence")
    add_common(p_noe, "noether.csv")
    p_noe.add_argument("--n", type=int, default=100)
    p_noe.add_argument("--zero-generator", action="store_true",
                       help="replace the generator by zero (the invariant vanishes)")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        example=args.example, alpha=args.alpha, out=args.out,
        tol_stat=args.tol_stat, tol_control=args.tol_control,
        max_outer=args.max_outer, relax=args.relax,
        n=getattr(args, "n", 100), n_list=getattr(args, "n_list", ()),
        self_test=getattr(args, "self_test", False),
        zero_generator=getattr(args, "zero_generator", False),
    )
    runner = {"solve": run_solve, "converge": run_converge,
              "noether": run_noether}[args.command]
    try:
        return runner(cfg)
    except (ValueError, SweepDivergenceError, FixedPointDivergenceError,
            ControlUpdateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
