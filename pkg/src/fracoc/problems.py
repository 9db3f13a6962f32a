"""Built-in control problems used by the command-line harness and tests."""

from __future__ import annotations

import math

import numpy as np

from .gl_ops import Grid
from .noether import OneParamGroup
from .pontryagin import OcpProblem

__all__ = ["build_example", "rotation_groups", "EXAMPLES"]


def _lq_problem(alpha: float, n: int, a: float = 0.0, b: float = 1.0) -> OcpProblem:
    # quadratic cost, scalar linear dynamics x' = x + v
    return OcpProblem(
        d=1, m=1, alpha=alpha, grid=Grid(a, b, n), initial=np.array([1.0]),
        L=lambda x, v, t: 0.5 * (x[0] ** 2 + v[0] ** 2),
        dL_dx=lambda x, v, t: x,
        dL_dv=lambda x, v, t: v,
        f=lambda x, v, t: x + v,
        df_dx=lambda x, v, t: 1.0,
        df_dv=lambda x, v, t: 1.0,
        lipschitz_M=1.0,
        control_update=lambda x, w, t: -w,
    )


def _solved_problem(alpha: float, n: int, a: float = 0.0, b: float = 1.0) -> OcpProblem:
    # linear-in-state cost with a (1 - t) weight, same dynamics as lq
    return OcpProblem(
        d=1, m=1, alpha=alpha, grid=Grid(a, b, n), initial=np.array([1.0]),
        L=lambda x, v, t: (1.0 - t) * x[0] + 0.5 * v[0] ** 2,
        dL_dx=lambda x, v, t: 1.0 - t,
        dL_dv=lambda x, v, t: v,
        f=lambda x, v, t: x + v,
        df_dx=lambda x, v, t: 1.0,
        df_dv=lambda x, v, t: 1.0,
        lipschitz_M=1.0,
        control_update=lambda x, w, t: -w,
    )


def _rotation_problem(alpha: float, n: int, a: float = 0.0, b: float = 1.0) -> OcpProblem:
    # planar, rotation-symmetric: L = (|x|^2 + |v|^2)/2, x' = x + v
    eye = np.eye(2)
    return OcpProblem(
        d=2, m=2, alpha=alpha, grid=Grid(a, b, n), initial=np.array([1.0, 2.0]),
        L=lambda x, v, t: 0.5 * (float(x @ x) + float(v @ v)),
        dL_dx=lambda x, v, t: x,
        dL_dv=lambda x, v, t: v,
        f=lambda x, v, t: x + v,
        df_dx=lambda x, v, t: eye,
        df_dv=lambda x, v, t: eye,
        lipschitz_M=1.0,
        control_update=lambda x, w, t: -w,
    )


def _zero_problem(alpha: float, n: int, a: float = 0.0, b: float = 1.0) -> OcpProblem:
    # frozen dynamics and pure control cost: the optimum is u = 0, p = 0
    return OcpProblem(
        d=1, m=1, alpha=alpha, grid=Grid(a, b, n), initial=np.array([1.0]),
        L=lambda x, v, t: 0.5 * v[0] ** 2,
        dL_dx=lambda x, v, t: 0.0,
        dL_dv=lambda x, v, t: v,
        f=lambda x, v, t: 0.0,
        df_dx=lambda x, v, t: 0.0,
        df_dv=lambda x, v, t: 0.0,
        lipschitz_M=0.0,
        control_update=lambda x, w, t: np.zeros(1),
    )


EXAMPLES = {
    "lq": _lq_problem,
    "solved": _solved_problem,
    "rotation": _rotation_problem,
    "zero": _zero_problem,
}


def build_example(name: str, alpha: float, n: int) -> OcpProblem:
    """Instantiate a registry problem on [0, 1]."""
    try:
        builder = EXAMPLES[name]
    except KeyError:
        raise ValueError(
            f"unknown example {name!r}; choose from {sorted(EXAMPLES)}") from None
    return builder(alpha, n)


def _rotation(theta: float) -> OneParamGroup:
    def apply(s: float, x: np.ndarray) -> np.ndarray:
        ang = s * theta
        c, sn = math.cos(ang), math.sin(ang)
        return np.array([c * x[0] - sn * x[1], sn * x[0] + c * x[1]])

    return OneParamGroup(
        map=apply,
        generator=lambda x: np.array([-theta * x[1], theta * x[0]]),
    )


def rotation_groups(theta1: float = 1.0, theta2: float = 1.0,
                    theta3: float = -1.0) -> tuple[OneParamGroup, ...]:
    """The planar rotation action on (state, control, adjoint).

    The adjoint turns the opposite way, which is exactly what leaves the
    rotation problem's Hamiltonian bracket unchanged along solutions.
    """
    return (_rotation(theta1), _rotation(theta2), _rotation(theta3))
