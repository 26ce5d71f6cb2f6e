import numpy as np
import pytest

from conftest import affine, half_sq
from twoscale.errors import DivergenceError, InvalidParameterError, NonConvergenceError
from twoscale.harness import cached_mesh
from twoscale.operator import apply_T_all, build_context, is_discretely_convex
from twoscale.pwl import interpolate
from twoscale.solver import (
    Problem,
    SolverConfig,
    initial_guess,
    node_operator,
    node_solve,
    residual,
    solve,
)
from twoscale.verify import suite_comparison, suite_continuous_dependence


def zero(x):
    return np.zeros(len(x))


def one(x):
    return np.ones(len(x))


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        SolverConfig(nodal_tol=0)
    with pytest.raises(InvalidParameterError):
        SolverConfig(order="spiral")
    with pytest.raises(InvalidParameterError):
        SolverConfig(mode="newton")


def test_negative_rhs_rejected(ctx8, disk):
    with pytest.raises(InvalidParameterError):
        solve(ctx8, Problem(disk, lambda x: -one(x), affine))


def test_initial_guess_is_subsolution(ctx16, mesh16, disk):
    w0 = initial_guess(ctx16, Problem(disk, zero, affine))
    assert apply_T_all(ctx16, w0).min() >= 1 - 1e-9
    assert np.array_equal(w0.values[mesh16.boundary], affine(mesh16.nodes[mesh16.boundary]))
    f = 3 + half_sq(mesh16.nodes[ctx16.stencil.nodes])
    w1 = initial_guess(ctx16, Problem(disk, lambda x: 3 + half_sq(x), half_sq))
    assert np.all(apply_T_all(ctx16, w1) >= f)
    assert np.isfinite(residual(ctx16, w1.values, f))


def test_node_solve_fixed_point(ctx8, mesh8):
    w = interpolate(mesh8, lambda x: np.exp(half_sq(x)))
    i = int(ctx8.stencil.nodes[10])
    f_i = node_operator(ctx8, w, i, w.values[i])
    assert node_solve(ctx8, w, i, f_i) == w.values[i]


def test_node_solve_monotone_in_rhs(ctx8, mesh8):
    w = interpolate(mesh8, lambda x: np.exp(half_sq(x)))
    for i in ctx8.stencil.nodes[::15]:
        t1 = node_solve(ctx8, w, int(i), 1.0)
        t2 = node_solve(ctx8, w, int(i), 2.0)
        assert t2 <= t1


def test_node_solve_grid_scan_oracle(ctx8, mesh8):
    rng = np.random.default_rng(11)
    w = interpolate(mesh8, lambda x: half_sq(x) + 0.1 * np.sin(4 * x[:, 0]))
    cfg = SolverConfig(bisection_tol=1e-12)
    for i in rng.choice(ctx8.stencil.nodes, 5, replace=False):
        i = int(i)
        f_i = float(rng.uniform(0.2, 3))
        t = node_solve(ctx8, w, i, f_i, cfg)
        lo, hi = t - 0.05, t + 0.05
        grid = np.arange(lo, hi, 1e-6)
        vals = np.array([node_operator(ctx8, w, i, s) for s in grid])
        # the map is non-increasing: first grid point where it drops to f_i
        assert np.all(np.diff(vals) <= 1e-12)
        k = int(np.argmax(vals <= f_i))
        assert abs(grid[k] - t) <= 1e-5
        assert abs(node_operator(ctx8, w, i, t) - f_i) <= 1e-10


def test_node_solve_bracket_failure(ctx8, mesh8):
    w = interpolate(mesh8, half_sq)
    with pytest.raises(DivergenceError) as exc:
        node_solve(ctx8, w, int(ctx8.stencil.nodes[0]), 1e250)
    assert exc.value.node == int(ctx8.stencil.nodes[0])


def test_affine_solution_exact(disk):
    for ht in (1 / 8, 1 / 16, 1 / 32):
        mesh = cached_mesh(disk, ht, 0)
        ctx = build_context(mesh, mesh.h ** 0.5, mesh.h ** 0.5)
        u, rep = solve(ctx, Problem(disk, zero, affine))
        assert np.max(np.abs(u.values - affine(mesh.nodes))) <= 1e-8
        assert rep.converged and rep.residual <= 1e-9


def test_solution_contract(ctx16, mesh16, disk):
    cfg = SolverConfig(nodal_tol=1e-11, bisection_tol=1e-11)
    prob = Problem(disk, one, half_sq)
    u, rep = solve(ctx16, prob, cfg)
    assert np.array_equal(u.values[mesh16.boundary], half_sq(mesh16.nodes[mesh16.boundary]))
    assert rep.residual <= 10 * cfg.bisection_tol
    assert rep.residual_history[-1][1] == residual(ctx16, u.values, one(ctx16.stencil.nodes))
    ok, _ = is_discretely_convex(ctx16, u)
    assert ok
    assert rep.min_update >= -1e-8  # monotone progress from the subsolution
    assert rep.final_update < cfg.nodal_tol
    assert rep.epsilon == ctx16.epsilon


def test_quadratic_error_decreases(disk):
    errs = []
    for ht in (1 / 8, 1 / 16, 1 / 32):
        mesh = cached_mesh(disk, ht, 0)
        ctx = build_context(mesh, mesh.h ** 0.5, mesh.h ** 0.5)
        u, _ = solve(ctx, Problem(disk, one, half_sq))
        errs.append(np.max(np.abs(u.values - half_sq(mesh.nodes))))
    assert errs[0] > errs[1] > errs[2]


def test_homogeneity(ctx8, disk):
    cfg = SolverConfig(nodal_tol=1e-12, bisection_tol=1e-12)

    def f(x):
        return 1 + np.sum(x ** 2, axis=-1)

    def g(x):
        return np.cosh(x[..., 0]) + 0.2 * x[..., 1]

    u1, _ = solve(ctx8, Problem(disk, f, g), cfg)
    u2, _ = solve(ctx8, Problem(disk, lambda x: 4 * f(x), lambda x: 2 * g(x)), cfg)
    assert np.max(np.abs(u2.values - 2 * u1.values)) <= 1e-9


@pytest.mark.parametrize("kw", [dict(order="red-black"), dict(order="symmetric"),
                                dict(local_solve="bisection"), dict(mode="jacobi")])
def test_variants_agree(ctx8, disk, kw):
    prob = Problem(disk, lambda x: np.exp(np.sum(x ** 2, axis=-1)), lambda x: half_sq(x) + x[..., 0])
    base, _ = solve(ctx8, prob, SolverConfig(nodal_tol=1e-12, bisection_tol=1e-12))
    u, rep = solve(ctx8, prob, SolverConfig(nodal_tol=1e-12, bisection_tol=1e-12, **kw))
    assert np.max(np.abs(u.values - base.values)) <= 1e-9
    assert rep.min_update >= -1e-8
    assert rep.mode == kw.get("mode", "gauss-seidel")


def test_nonconvergence_carries_report(ctx8, disk):
    with pytest.raises(NonConvergenceError) as exc:
        solve(ctx8, Problem(disk, one, half_sq), SolverConfig(max_sweeps=2))
    assert exc.value.report.iterations == 2
    assert len(exc.value.report.update_history) == 2
    assert exc.value.report.residual_history[-1][0] == 2
    assert exc.value.field is not None


def test_given_initializer(ctx8, mesh8, disk):
    prob = Problem(disk, one, half_sq)
    u, _ = solve(ctx8, prob)
    u2, rep = solve(ctx8, prob, initial=u)
    assert rep.iterations <= 2
    assert np.max(np.abs(u2.values - u.values)) <= 1e-9


def test_comparison_suite(ctx8):
    res = suite_comparison(ctx8, 10)
    assert res.passed, res.line()


def test_continuous_dependence_suite(ctx8):
    res = suite_continuous_dependence(ctx8, 10)
    assert res.passed, res.line()
    assert res.detail["max_C_meas"] <= 100
