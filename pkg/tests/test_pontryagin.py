"""Sweep solver pieces: state/adjoint closed forms, cost calculus, convergence."""

from __future__ import annotations

import numpy as np
import numpy.testing as npt
import pytest

from fracoc import (ContractionError, FixedPointOpts, Grid, OcpProblem,
                    SweepDivergenceError, SweepOpts, TimeSeq, adjoint_solve,
                    build_example, cost, delta_minus, euler_lagrange_residual,
                    gateaux_derivative, solve_pontryagin, state_solve,
                    stationarity_residual)
from fracoc.pontryagin import ControlUpdateError, _secant_root

TIGHT_INNER = FixedPointOpts(tol=1e-14, max_iters=200)


def reduced_problem(alpha, n, dl_dv=None, l_fun=None):
    """f(x, v, t) = v with a quadratic running cost unless overridden."""
    return OcpProblem(
        d=1, m=1, alpha=alpha, grid=Grid(0.0, 1.0, n), initial=np.array([1.0]),
        L=l_fun or (lambda x, v, t: 0.5 * (x[0] ** 2 + v[0] ** 2)),
        dL_dx=lambda x, v, t: x,
        dL_dv=dl_dv or (lambda x, v, t: v),
        f=lambda x, v, t: v,
        df_dx=lambda x, v, t: 0.0,
        df_dv=lambda x, v, t: 1.0,
        lipschitz_M=1.0,
        control_update=None if dl_dv else (lambda x, w, t: -w),
    )


def nonlinear_problem(alpha, n):
    return OcpProblem(
        d=1, m=1, alpha=alpha, grid=Grid(0.0, 1.0, n), initial=np.array([1.0]),
        L=lambda x, v, t: 0.5 * (x[0] ** 2 + v[0] ** 2),
        dL_dx=lambda x, v, t: x,
        dL_dv=lambda x, v, t: v,
        f=lambda x, v, t: np.sin(x) + v,
        df_dx=lambda x, v, t: np.cos(x[0]),
        df_dv=lambda x, v, t: 1.0,
        lipschitz_M=1.0,
        control_update=lambda x, w, t: -w,
    )


# -- state and adjoint closed forms --------------------------------------------

def test_state_solve_integer_order_geometric():
    problem = build_example("lq", 1.0, 10)
    q = state_solve(problem, TimeSeq.zeros(10), TIGHT_INNER)
    expect = (1.0 / (1.0 - problem.grid.h)) ** np.arange(11)
    npt.assert_allclose(q.values[:, 0], expect, rtol=1e-12)


def test_adjoint_solve_integer_order_recurrence():
    problem = build_example("lq", 1.0, 10)
    h = problem.grid.h
    u = TimeSeq.zeros(10)
    q = state_solve(problem, u, TIGHT_INNER)
    p = adjoint_solve(problem, u, q, TIGHT_INNER)

    expect = np.zeros(11)
    for k in range(9, -1, -1):
        expect[k] = (expect[k + 1] + h * q.values[k + 1, 0]) / (1.0 - h)
    npt.assert_allclose(p.values[:, 0], expect, rtol=1e-11)
    assert p.values[10, 0] == 0.0


def test_solver_layers_reject_unstable_steps():
    # the coupled system demands 2 h^alpha M < 1, stricter than each march
    problem = build_example("lq", 1.0, 1)  # h = 1, M = 1
    with pytest.raises(ContractionError):
        state_solve(problem, TimeSeq.zeros(1))
    with pytest.raises(ContractionError):
        solve_pontryagin(problem)
    marginal = build_example("lq", 1.0, 2)  # 2 h M = 1 exactly
    with pytest.raises(ContractionError):
        solve_pontryagin(marginal)


def test_control_shape_validation():
    problem = build_example("lq", 1.0, 8)
    with pytest.raises(ValueError):
        state_solve(problem, TimeSeq.zeros(7))
    with pytest.raises(ValueError):
        state_solve(problem, TimeSeq.zeros(8, 2))
    with pytest.raises(ValueError):
        state_solve(problem, TimeSeq(np.zeros((9, 1)), 2, 8))
    # a control valid on [1, n] only is enough: slot 0 is never read
    state_solve(problem, TimeSeq(np.zeros((9, 1)), 1, 8))


# -- cost and its derivative -----------------------------------------------------

def test_cost_of_frozen_dynamics_is_quadrature():
    problem = build_example("zero", 0.5, 20)
    u = TimeSeq.constant(3.0, 20)
    npt.assert_allclose(cost(problem, u), 0.5 * 9.0, rtol=1e-14)


def test_cost_matches_geometric_sum():
    problem = build_example("lq", 1.0, 10)
    h = problem.grid.h
    rho = 1.0 / (1.0 - h)
    expect = 0.5 * h * sum(rho ** (2 * k) for k in range(1, 11))
    npt.assert_allclose(cost(problem, TimeSeq.zeros(10), TIGHT_INNER),
                        expect, rtol=1e-11)


@pytest.mark.parametrize("alpha", (0.5, 1.0))
def test_gateaux_matches_central_difference_quadratic(alpha):
    # quadratic cost: the symmetric difference quotient is exact in epsilon
    problem = build_example("lq", alpha, 12)
    rng = np.random.default_rng(2)
    u = TimeSeq(rng.normal(size=(13, 1)))
    ubar = TimeSeq(rng.normal(size=(13, 1)))
    dj = gateaux_derivative(problem, u, ubar, TIGHT_INNER)
    eps = 1e-3
    up = TimeSeq(u.values + eps * ubar.values)
    um = TimeSeq(u.values - eps * ubar.values)
    fd = (cost(problem, up, TIGHT_INNER) - cost(problem, um, TIGHT_INNER)) / (2 * eps)
    npt.assert_allclose(dj, fd, rtol=1e-8, atol=1e-9)


def test_gateaux_matches_central_difference_nonlinear():
    problem = nonlinear_problem(0.5, 15)
    rng = np.random.default_rng(4)
    u = TimeSeq(rng.normal(size=(16, 1)))
    ubar = TimeSeq(rng.normal(size=(16, 1)))
    dj = gateaux_derivative(problem, u, ubar, TIGHT_INNER)
    eps = 1e-4
    up = TimeSeq(u.values + eps * ubar.values)
    um = TimeSeq(u.values - eps * ubar.values)
    fd = (cost(problem, up, TIGHT_INNER) - cost(problem, um, TIGHT_INNER)) / (2 * eps)
    assert abs(dj - fd) <= 1e-6


def test_stationarity_residual_formula():
    problem = build_example("lq", 0.75, 6)
    rng = np.random.default_rng(9)
    q = TimeSeq(rng.normal(size=(7, 1)))
    u = TimeSeq(rng.normal(size=(7, 1)))
    p = TimeSeq(rng.normal(size=(7, 1)))
    res = stationarity_residual(problem, q, u, p)
    assert (res.lo, res.hi) == (1, 6)
    for k in range(1, 7):
        assert res[k][0] == abs(u.values[k, 0] + p.values[k - 1, 0])


# -- the outer sweep ----------------------------------------------------------------

def test_zero_problem_converges_immediately():
    sol = solve_pontryagin(build_example("zero", 0.5, 10))
    assert sol.outer_iters == 1
    assert sol.stationarity_residual == 0.0
    npt.assert_array_equal(sol.U.values, 0.0)
    npt.assert_array_equal(sol.P.values, 0.0)
    npt.assert_array_equal(sol.Q.values, 1.0)
    assert sol.cost == 0.0


@pytest.mark.parametrize("alpha", (0.25, 0.5, 0.75, 1.0))
def test_solved_example_tracks_its_closed_form(alpha):
    from fracoc import max_control_error, solved_example_exact_control
    problem = build_example("solved", alpha, 100)
    sol = solve_pontryagin(problem)
    assert sol.outer_iters <= 10
    err = max_control_error(sol.U, lambda t: solved_example_exact_control(alpha, t),
                            problem.grid)
    assert 0.0 < err < 0.1


def test_lq_tracks_its_closed_form():
    from fracoc import lq_exact_control, max_control_error
    problem = build_example("lq", 1.0, 100)
    sol = solve_pontryagin(problem)
    err = max_control_error(sol.U, lq_exact_control, problem.grid)
    assert 0.0 < err < 0.04


def test_converged_solution_is_internally_consistent():
    opts = SweepOpts(tol_stationarity=1e-10, tol_control=1e-10)
    problem = build_example("lq", 1.0, 30)
    sol = solve_pontryagin(problem, opts=opts)
    assert sol.stationarity_residual <= 1e-10
    recomputed = stationarity_residual(problem, sol.Q, sol.U, sol.P).sup_norm()
    assert recomputed == sol.stationarity_residual
    npt.assert_array_equal(sol.U.values[0], sol.U.values[1])
    npt.assert_allclose(sol.cost, cost(problem, sol.U), rtol=1e-12)


def test_plain_unit_relaxation_diverges_on_the_coupled_problem():
    # the sweep map of this problem has a real eigenvalue below -1, so the
    # unrelaxed iteration cannot converge; the adaptive default handles it
    problem = build_example("lq", 1.0, 10)
    opts = SweepOpts(max_outer_iters=40, adaptive=False, relaxation=1.0)
    with pytest.raises(SweepDivergenceError) as exc:
        solve_pontryagin(problem, opts=opts)
    assert exc.value.iters == 40
    assert exc.value.increment > 1.0

    sol = solve_pontryagin(problem, opts=SweepOpts(max_outer_iters=40))
    assert sol.outer_iters <= 20


def test_fixed_relaxation_below_threshold_converges():
    # 2 / (1 + |mu|) with |mu| ~ 1.36 puts the stability cap near 0.85
    problem = build_example("lq", 1.0, 10)
    opts = SweepOpts(adaptive=False, relaxation=0.4)
    sol = solve_pontryagin(problem, opts=opts)
    assert sol.stationarity_residual <= opts.tol_stationarity


def test_warm_start_accepts_and_checks_u_init():
    problem = build_example("solved", 0.5, 40)
    cold = solve_pontryagin(problem)
    warm = solve_pontryagin(problem, u_init=cold.U)
    assert warm.outer_iters <= cold.outer_iters
    npt.assert_allclose(warm.U.values, cold.U.values, atol=1e-8)
    with pytest.raises(ValueError):
        solve_pontryagin(problem, u_init=TimeSeq.zeros(39))


def test_sweep_option_validation():
    with pytest.raises(ValueError):
        SweepOpts(tol_stationarity=0.0)
    with pytest.raises(ValueError):
        SweepOpts(max_outer_iters=0)
    with pytest.raises(ValueError):
        SweepOpts(relaxation=0.0)
    with pytest.raises(ValueError):
        SweepOpts(relaxation=1.5)


# -- scalar control updates without a closed form -------------------------------------

def test_secant_root_finds_monotone_cubic_root():
    root = _secant_root(lambda s: s ** 3 - 2.0, 1.0, 1e-13, node=3)
    npt.assert_allclose(root, 2.0 ** (1.0 / 3.0), rtol=1e-10)


def test_secant_root_reports_rootless_input():
    with pytest.raises(ControlUpdateError):
        _secant_root(lambda s: 1.0 / (1.0 + s * s) + 0.5, 0.0, 1e-13, node=7)


def test_implicit_control_update_agrees_with_cardano():
    # dH/dv = v^3 + v + p has one real root, known in closed form
    def cardano(x, w, t):
        p0 = float(w[0])
        disc = np.sqrt(p0 ** 2 / 4.0 + 1.0 / 27.0)
        return np.array([np.cbrt(-p0 / 2.0 + disc) + np.cbrt(-p0 / 2.0 - disc)])

    quartic_l = lambda x, v, t: 0.5 * x[0] ** 2 + 0.25 * v[0] ** 4 + 0.5 * v[0] ** 2
    quartic_lv = lambda x, v, t: v ** 3 + v
    implicit = reduced_problem(0.5, 20, dl_dv=quartic_lv, l_fun=quartic_l)
    explicit = OcpProblem(
        d=1, m=1, alpha=0.5, grid=implicit.grid, initial=implicit.initial,
        L=quartic_l, dL_dx=implicit.dL_dx, dL_dv=quartic_lv,
        f=implicit.f, df_dx=implicit.df_dx, df_dv=implicit.df_dv,
        lipschitz_M=1.0, control_update=cardano)

    sol_i = solve_pontryagin(implicit)
    sol_e = solve_pontryagin(explicit)
    npt.assert_allclose(sol_i.U.values, sol_e.U.values, atol=1e-8)
    assert sol_i.stationarity_residual <= 1e-9


# -- the reduced second-order form ------------------------------------------------------

def test_reduced_residual_matches_hand_stencil_at_order_one():
    rng = np.random.default_rng(12)
    n = 9
    problem = reduced_problem(1.0, n)
    h = problem.grid.h
    qv = rng.normal(size=n + 1)
    q = TimeSeq(qv)
    dq = np.zeros(n + 1)
    dq[1:] = ((qv[1:] - qv[0]) - (qv[:-1] - qv[0])) / h
    u = TimeSeq(dq.reshape(-1, 1), 1, n)

    m_seq = np.zeros(n + 1)
    m_seq[:n] = -dq[1:]
    expect = np.abs((m_seq[:n] - m_seq[1:]) / h - qv[1:])

    res = euler_lagrange_residual(problem, q, u)
    assert (res.lo, res.hi) == (0, n - 1)
    npt.assert_allclose(res.valid_values()[:, 0], expect, atol=1e-10)


def test_reduced_residual_is_small_on_converged_solutions():
    opts = SweepOpts(tol_stationarity=1e-11, tol_control=1e-11,
                     inner=FixedPointOpts(tol=1e-14, max_iters=200))
    for alpha in (0.5, 1.0):
        problem = reduced_problem(alpha, 40)
        sol = solve_pontryagin(problem, opts=opts)
        res = euler_lagrange_residual(problem, sol.Q, sol.U)
        assert res.sup_norm() <= 1e-6


def test_reduced_residual_input_guards():
    problem = reduced_problem(0.5, 8)
    q = TimeSeq(np.linspace(1.0, 2.0, 9))
    with pytest.raises(ValueError, match="differs"):
        euler_lagrange_residual(problem, q, TimeSeq.constant(9.0, 8))

    wide = build_example("rotation", 0.5, 8)
    with pytest.raises(ValueError, match="not identity"):
        euler_lagrange_residual(wide, TimeSeq.zeros(8, 2), TimeSeq.zeros(8, 2))

    mixed = OcpProblem(
        d=2, m=1, alpha=0.5, grid=Grid(0.0, 1.0, 8), initial=np.zeros(2),
        L=lambda x, v, t: 0.0, dL_dx=lambda x, v, t: np.zeros(2),
        dL_dv=lambda x, v, t: np.zeros(1), f=lambda x, v, t: np.zeros(2),
        df_dx=lambda x, v, t: np.zeros((2, 2)),
        df_dv=lambda x, v, t: np.zeros((2, 1)), lipschitz_M=0.0)
    with pytest.raises(ValueError, match="matching"):
        euler_lagrange_residual(mixed, TimeSeq.zeros(8, 2), TimeSeq.zeros(8))


# -- problem container -------------------------------------------------------------------

def test_problem_validation():
    grid = Grid(0.0, 1.0, 4)
    kw = dict(grid=grid, initial=np.array([1.0]),
              L=lambda x, v, t: 0.0, dL_dx=lambda x, v, t: 0.0,
              dL_dv=lambda x, v, t: 0.0, f=lambda x, v, t: 0.0,
              df_dx=lambda x, v, t: 0.0, df_dv=lambda x, v, t: 0.0,
              lipschitz_M=1.0)
    with pytest.raises(ValueError):
        OcpProblem(d=0, m=1, alpha=0.5, **kw)
    with pytest.raises(ValueError):
        OcpProblem(d=1, m=1, alpha=1.5, **kw)
    with pytest.raises(ValueError):
        OcpProblem(d=2, m=1, alpha=0.5, **kw)  # initial has size 1
    kw_bad = dict(kw, lipschitz_M=-1.0)
    with pytest.raises(ValueError):
        OcpProblem(d=1, m=1, alpha=0.5, **kw_bad)


def test_hamiltonian_and_gradients_normalize_scalars():
    problem = build_example("lq", 1.0, 4)
    x, v, w = np.array([2.0]), np.array([3.0]), [0.5]
    npt.assert_allclose(problem.hamiltonian(x, v, w, 0.25),
                        0.5 * (4.0 + 9.0) + 0.5 * 5.0)
    npt.assert_allclose(problem.dh_dv(x, v, w, 0.25), [3.5])
    npt.assert_allclose(problem.dh_dx(x, v, w, 0.25), [2.5])
