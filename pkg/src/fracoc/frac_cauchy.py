"""Stepwise solvers for discrete fractional Cauchy problems.

The left problem marches k = 1..N through the implicit update

    Q_k = h^alpha * F(Q_k, t_k) + Q_0 - sum_{r=1..k-1} c_r (Q_{k-r} - Q_0),

each step resolved by fixed-point iteration, which contracts whenever
h^alpha * K < 1 for a Lipschitz bound K of F.  The right problem mirrors
this from the terminal node down.  Both keep the full memory tail, so one
solve costs O(N^2) plus the iteration work.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gl_ops import Grid, TimeSeq, _order_value, gl_coefficients

__all__ = [
    "CauchyRhs",
    "FixedPointOpts",
    "ContractionError",
    "FixedPointDivergenceError",
    "solve_left_cauchy",
    "solve_right_cauchy",
]


class ContractionError(ValueError):
    """h^alpha times the Lipschitz bound is not below one."""


class FixedPointDivergenceError(RuntimeError):
    """A per-node fixed point failed to converge; carries the node index."""

    def __init__(self, node: int, last_step: float, tol: float):
        self.node = node
        self.last_step = last_step
        super().__init__(
            f"fixed point at node {node} still moving by {last_step:.3e} "
            f"after the iteration budget (tol {tol:.1e})")


@dataclass(frozen=True)
class CauchyRhs:
    """Right-hand side F(x, t) together with a Lipschitz bound in x."""

    eval: Callable[[np.ndarray, float], np.ndarray]
    lipschitz_K: float

    def __post_init__(self) -> None:
        if self.lipschitz_K < 0:
            raise ValueError(f"Lipschitz bound must be >= 0, got {self.lipschitz_K}")


@dataclass(frozen=True)
class FixedPointOpts:
    """Stopping rule for the per-node iterations (infinity norm)."""

    tol: float = 1e-12
    max_iters: int = 100

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


def _check_contraction(alpha: float, grid: Grid, lipschitz: float) -> None:
    factor = grid.h ** alpha * lipschitz
    if not factor < 1.0:
        raise ContractionError(
            f"h^alpha * K = {factor:.6g} >= 1; refine the grid or rescale")


def _fixed_point(apply_map, start, opts, node):
    x = start
    gap = 0.0
    for it in range(1, opts.max_iters + 1):
        x_new = apply_map(x)
        step = float(np.max(np.abs(x_new - x)))
        if it == 1:
            gap = step
        x = x_new
        if step <= opts.tol:
            return x, it, gap
    raise FixedPointDivergenceError(node, step, opts.tol)


def solve_left_cauchy(alpha, grid: Grid, rhs: CauchyRhs, initial,
                      opts: FixedPointOpts | None = None,
                      full_output: bool = False):
    """March the left fractional Cauchy problem from Q_0 = initial.

    Returns the solution sequence, valid on all of [0, N].  With
    ``full_output=True`` also returns a dict with per-node iteration counts
    and first-step gaps, which bound the contraction behaviour.
    """
    a = _order_value(alpha)
    opts = opts or FixedPointOpts()
    _check_contraction(a, grid, rhs.lipschitz_K)
    n = grid.n
    c = gl_coefficients(a, n).coeffs
    ha = grid.h ** a
    times = grid.times
    q0 = np.atleast_1d(np.asarray(initial, dtype=float)).reshape(-1)
    d = q0.size

    q = np.empty((n + 1, d))
    q[0] = q0
    iters = np.zeros(n + 1, dtype=int)
    gaps = np.zeros(n + 1)
    for k in range(1, n + 1):
        if k >= 2:
            hist = c[1:k, None] * (q[k - 1:0:-1] - q0)
            const = q0 - hist.sum(axis=0)
        else:
            const = q0
        t_k = times[k]

        def step_map(x, t=t_k, const=const):
            fx = np.asarray(rhs.eval(x, t), dtype=float).reshape(-1)
            if fx.size != d:
                raise ValueError(f"rhs returned size {fx.size}, expected {d}")
            return ha * fx + const

        q[k], iters[k], gaps[k] = _fixed_point(step_map, q[k - 1].copy(), opts, k)

    seq = TimeSeq(q)
    if full_output:
        return seq, {"iterations": iters, "initial_gaps": gaps}
    return seq


def solve_right_cauchy(alpha, grid: Grid,
                       rhs_shifted: Callable[[np.ndarray, int], np.ndarray],
                       lipschitz_K: float, terminal,
                       opts: FixedPointOpts | None = None,
                       full_output: bool = False):
    """March the right fractional Cauchy problem down from P_N = terminal.

    The right-hand side is indexed by node, P_k = h^alpha * rhs(P_k, k) + ...,
    which keeps this solver ignorant of where its callers get their data.
    """
    a = _order_value(alpha)
    opts = opts or FixedPointOpts()
    if lipschitz_K < 0:
        raise ValueError(f"Lipschitz bound must be >= 0, got {lipschitz_K}")
    _check_contraction(a, grid, lipschitz_K)
    n = grid.n
    c = gl_coefficients(a, n).coeffs
    ha = grid.h ** a
    p_n = np.atleast_1d(np.asarray(terminal, dtype=float)).reshape(-1)
    d = p_n.size

    p = np.empty((n + 1, d))
    p[n] = p_n
    iters = np.zeros(n + 1, dtype=int)
    gaps = np.zeros(n + 1)
    for k in range(n - 1, -1, -1):
        m = n - k - 1  # number of memory terms
        if m >= 1:
            hist = c[1:m + 1, None] * (p[k + 1:n] - p_n)
            const = p_n - hist.sum(axis=0)
        else:
            const = p_n

        def step_map(x, k=k, const=const):
            fx = np.asarray(rhs_shifted(x, k), dtype=float).reshape(-1)
            if fx.size != d:
                raise ValueError(f"rhs returned size {fx.size}, expected {d}")
            return ha * fx + const

        p[k], iters[k], gaps[k] = _fixed_point(step_map, p[k + 1].copy(), opts, k)

    seq = TimeSeq(p)
    if full_output:
        return seq, {"iterations": iters, "initial_gaps": gaps}
    return seq
