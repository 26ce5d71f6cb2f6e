"""Monotone nonlinear Gauss-Seidel for the discrete Dirichlet problem.

Starting from a discrete subsolution, each nodal update solves the scalar
equation ``T[w](x_i) = f(x_i)`` in the value at ``x_i`` alone.  The operator
is non-increasing in the centre value and non-decreasing in all other
values, so iterates increase monotonically towards the discrete solution.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .barriers import build_interior_barrier
from .errors import DivergenceError, InvalidParameterError, NonConvergenceError
from .mesh import DomainSpec
from .operator import OperatorContext
from .pwl import NodalField

logger = logging.getLogger(__name__)

MAX_DOUBLINGS = 60


@dataclass
class Problem:
    """``det D^2 u = f`` in the domain, ``u = g`` on its boundary.

    ``f`` and ``g`` (and ``exact``) act on ``(n, 2)`` point arrays.
    """

    domain: DomainSpec
    f: Callable
    g: Callable
    exact: Callable | None = None
    degenerate: bool = False
    name: str = ""


@dataclass
class SolverConfig:
    nodal_tol: float = 1e-10
    max_sweeps: int = 100_000
    bisection_tol: float = 1e-10
    bisection_maxiter: int = 200
    order: str = "lexicographic"
    initializer: str = "barrier"
    local_solve: str = "exact"
    mode: str = "gauss-seidel"

    def __post_init__(self):
        if self.nodal_tol <= 0 or self.bisection_tol <= 0:
            raise InvalidParameterError("tolerances must be positive")
        if self.order not in ("lexicographic", "red-black", "symmetric"):
            raise InvalidParameterError(f"unknown sweep order {self.order!r}")
        if self.local_solve not in ("exact", "bisection"):
            raise InvalidParameterError(f"unknown local solve {self.local_solve!r}")
        if self.mode not in ("gauss-seidel", "jacobi"):
            raise InvalidParameterError(f"unknown mode {self.mode!r}")
        if self.initializer not in ("barrier", "given"):
            raise InvalidParameterError(f"unknown initializer {self.initializer!r}")


@dataclass
class SolveReport:
    """``update_history`` holds the largest nodal update of every sweep;
    ``residual_history`` holds ``(sweep, residual)`` at the sweeps where the
    residual was evaluated (candidate convergence and the final sweep).
    """

    iterations: int = 0
    update_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    final_update: float = float("nan")
    min_update: float = float("inf")
    wall_time: float = 0.0
    converged: bool = False
    mode: str = "gauss-seidel"
    epsilon: tuple = ()

    @property
    def residual(self) -> float:
        return self.residual_history[-1][1] if self.residual_history else float("nan")

    def to_dict(self):
        return asdict(self)


def nodal_rhs(ctx: OperatorContext, problem: Problem) -> np.ndarray:
    f = np.asarray(problem.f(ctx.mesh.nodes[ctx.stencil.nodes]), dtype=float)
    if f.ndim == 0:
        f = np.full(len(ctx.stencil.nodes), float(f))
    if np.any(f < 0):
        raise InvalidParameterError("right-hand side f must be non-negative at interior nodes")
    return f


def _values(fn, pts):
    v = np.asarray(fn(pts), dtype=float)
    return np.full(len(pts), float(v)) if v.ndim == 0 else v


def affine_minorant(points, g_vals):
    """Least-squares affine fit of boundary data, shifted down to lie below it."""
    A = np.column_stack([np.ones(len(points)), points])
    coef, *_ = np.linalg.lstsq(A, g_vals, rcond=None)
    coef[0] -= max(0.0, float(np.max(A @ coef - g_vals)))
    return coef


def initial_guess(ctx: OperatorContext, problem: Problem) -> NodalField:
    """Discrete subsolution ``sigma q_h + L`` with boundary values set to ``g``.

    ``sigma = (max f)^(1/d) + 1`` gives ``T >= sigma^d > f``; ``L`` is an affine
    minorant of ``g`` on the boundary nodes.  Raising boundary values to ``g``
    can only increase ``T`` at interior nodes.
    """
    mesh = ctx.mesh
    f = nodal_rhs(ctx, problem)
    sigma = (f.max() if len(f) else 0.0) ** (1.0 / ctx.dim) + 1.0
    q = build_interior_barrier(mesh).field.values
    bnd = mesh.boundary
    g = _values(problem.g, mesh.nodes[bnd])
    c = affine_minorant(mesh.nodes[bnd], g)
    w = sigma * q + c[0] + mesh.nodes @ c[1:]
    w[bnd] = g
    return NodalField(mesh, w)


def _sweep_order(ctx: OperatorContext, order: str) -> np.ndarray:
    x = ctx.mesh.nodes[ctx.stencil.nodes]
    lex = np.lexsort((x[:, 0], x[:, 1]))
    if order == "red-black":
        return np.concatenate([lex[0::2], lex[1::2]])
    return lex


def _node_arrays(ctx, w, i):
    st = ctx.stencil
    r = st.row_of[i]
    if r < 0:
        raise InvalidParameterError(f"node {i} is not an interior node")
    m = st.n_directions
    s = np.empty(m)
    b = np.empty(m)
    _kernels._node_coeffs(i, r, w, st.ep_nodes, st.ep_weights, st.self_weight,
                          st.delta_hat[r] ** 2, s, b)
    return s, b


def node_solve(ctx: OperatorContext, field: NodalField, i: int, f_i: float,
               cfg: SolverConfig | None = None) -> float:
    """Value ``t`` with ``|T(x_i) - f_i| <= cfg.bisection_tol`` when ``field[i] = t``.

    Bracketing grows geometrically from the current value, then bisects on the
    non-increasing scalar map.
    """
    cfg = cfg or SolverConfig()
    s, b = _node_arrays(ctx, field.values, i)
    t, status, _ = _kernels.bisect_root(s, b, ctx.pairs, float(f_i), float(field.values[i]),
                                        cfg.bisection_tol, cfg.bisection_maxiter, MAX_DOUBLINGS)
    if status != 0:
        raise DivergenceError(f"no bracket for node {i} within {MAX_DOUBLINGS} doublings", node=i)
    return float(t)


def node_operator(ctx: OperatorContext, field: NodalField, i: int, t: float) -> float:
    """Operator value at ``x_i`` when its nodal value is replaced by ``t``."""
    s, b = _node_arrays(ctx, field.values, i)
    return float(_kernels.operator_at(float(t), s, b, ctx.pairs))


def residual(ctx: OperatorContext, w: np.ndarray, f: np.ndarray) -> float:
    st = ctx.stencil
    T = _kernels.operator_values(w, st.nodes, st.ep_nodes, st.ep_weights, st.delta_hat, ctx.pairs)
    return float(np.max(np.abs(T - f))) if len(T) else 0.0


def solve(ctx: OperatorContext, problem: Problem, cfg: SolverConfig | None = None,
          initial: NodalField | None = None):
    """Discrete solution and a :class:`SolveReport`.

    Stops once the largest nodal update is below ``nodal_tol`` and the
    residual is below ``10 * bisection_tol``.  The residual costs about a
    third of a sweep, so it is only evaluated once the update test passes.
    """
    cfg = cfg or SolverConfig()
    mesh = ctx.mesh
    st = ctx.stencil
    f = nodal_rhs(ctx, problem)
    if initial is None:
        w = initial_guess(ctx, problem).values.copy()
    else:
        w = initial.values.copy()
        bnd = mesh.boundary
        w[bnd] = _values(problem.g, mesh.nodes[bnd])
    # stencil rows laid out in sweep order so the sweep streams through memory
    perm = _sweep_order(ctx, cfg.order)
    nodes_p = st.nodes[perm]
    f_p = f[perm]
    ep_nodes_p = np.ascontiguousarray(st.ep_nodes[perm])
    ep_w_p = np.ascontiguousarray(st.ep_weights[perm])
    self_w_p = st.self_weight[perm]
    dh_p = st.delta_hat[perm]
    order = np.arange(len(perm))
    rev = order[::-1].copy()
    report = SolveReport(mode=cfg.mode, epsilon=(mesh.h, ctx.delta, ctx.theta))
    use_bis = cfg.local_solve == "bisection"
    res_tol = 10.0 * cfg.bisection_tol
    t0 = time.perf_counter()
    for sweep in range(1, cfg.max_sweeps + 1):
        if cfg.mode == "jacobi":
            up, low = _kernels.jacobi_sweep(w, st.nodes, f, st.ep_nodes, st.ep_weights,
                                            st.self_weight, st.delta_hat, ctx.pairs)
        else:
            o = rev if (cfg.order == "symmetric" and sweep % 2 == 0) else order
            up, low, bad = _kernels.gs_sweep(
                w, nodes_p, o, f_p, ep_nodes_p, ep_w_p, self_w_p, dh_p,
                ctx.pairs, use_bis, cfg.bisection_tol, cfg.bisection_maxiter, MAX_DOUBLINGS)
            if bad >= 0:
                raise DivergenceError(f"no bracket for node {int(nodes_p[bad])}", node=int(nodes_p[bad]))
        report.iterations = sweep
        report.final_update = float(up)
        report.min_update = min(report.min_update, float(low))
        report.update_history.append(float(up))
        if up < cfg.nodal_tol or sweep == cfg.max_sweeps:
            res = residual(ctx, w, f)
            report.residual_history.append((sweep, res))
            if up < cfg.nodal_tol and res < res_tol:
                report.converged = True
                break
    report.wall_time = time.perf_counter() - t0
    result = NodalField(mesh, w)
    logger.info("solve: %d sweeps, residual %.3e, %.2fs", report.iterations, report.residual,
                report.wall_time)
    if not report.converged:
        raise NonConvergenceError(
            f"no convergence after {cfg.max_sweeps} sweeps (residual {report.residual:.3e})",
            report=report, field=result)
    return result, report
