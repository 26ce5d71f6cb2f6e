"""The two-scale discrete Monge-Ampere operator and its structural checks."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .directions import OrthoTupleSet, tuple_set
from .errors import ContractError, InvalidParameterError
from .mesh import TriMesh
from .pwl import NodalField, SecondDiffStencil, build_stencils, second_differences

CONVEXITY_TOL = 1e-10


@dataclass(eq=False)
class OperatorContext:
    mesh: TriMesh
    tuples: OrthoTupleSet
    stencil: SecondDiffStencil
    delta: float
    theta: float | None
    dim: int = 2

    @property
    def epsilon(self):
        return (self.mesh.h, self.delta, self.theta)

    @property
    def pairs(self) -> np.ndarray:
        return self.tuples.pairs


def build_context(mesh: TriMesh, delta: float, theta: float | None = None,
                  tuples: OrthoTupleSet | None = None) -> OperatorContext:
    """Operator for scales ``(h, delta, theta)``; ``theta=None`` uses the axes pair only."""
    if not delta > 0:
        raise InvalidParameterError("delta must be positive")
    if tuples is None:
        tuples = tuple_set(theta)
    stencil = build_stencils(mesh, tuples.directions, delta)
    return OperatorContext(mesh, tuples, stencil, float(delta), theta)


def brackets(sd: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """``prod (sd)^+ - sum (sd)^-`` for every tuple; ``sd`` is ``(..., m)``."""
    s = sd[..., pairs]
    return np.prod(np.maximum(s, 0.0), axis=-1) - np.sum(np.maximum(-s, 0.0), axis=-1)


def apply_T_all(ctx: OperatorContext, field: NodalField, return_argmin=False):
    """Operator values at interior nodes, ordered by node index.

    With ``return_argmin`` also returns the minimising tuple index (first wins).
    """
    br = brackets(second_differences(field, ctx.stencil), ctx.pairs)
    k = np.argmin(br, axis=1)
    vals = br[np.arange(len(br)), k]
    return (vals, k) if return_argmin else vals


def _node_sd(ctx, field, i):
    r = ctx.stencil.row_of[i]
    if r < 0:
        raise InvalidParameterError(f"node {i} is not an interior node")
    st = ctx.stencil
    w = field.values
    ends = np.einsum("jk,jk->j", st.ep_weights[r], w[st.ep_nodes[r]])
    return (ends - 2.0 * w[i]) / st.delta_hat[r] ** 2


def apply_T(ctx: OperatorContext, field: NodalField, i: int) -> float:
    return float(np.min(brackets(_node_sd(ctx, field, i), ctx.pairs)))


def is_discretely_convex(ctx: OperatorContext, field: NodalField, tol=CONVEXITY_TOL):
    """``(ok, violations)`` where violations lists ``(node, direction_index)``."""
    sd = second_differences(field, ctx.stencil)
    r, j = np.nonzero(sd < -tol)
    viol = list(zip(ctx.stencil.nodes[r].tolist(), j.tolist()))
    return not viol, viol


def product_form_T(ctx: OperatorContext, field: NodalField, i: int, tol=CONVEXITY_TOL) -> float:
    """``min_v prod_j sd(x_i; v_j)``; requires discrete convexity at ``i``."""
    sd = _node_sd(ctx, field, i)
    if np.any(sd < -tol):
        raise ContractError(f"field is not discretely convex at node {i}")
    return float(np.min(np.prod(sd[ctx.pairs], axis=-1)))


def product_form_T_all(ctx: OperatorContext, field: NodalField, tol=CONVEXITY_TOL) -> np.ndarray:
    sd = second_differences(field, ctx.stencil)
    if np.any(sd < -tol):
        raise ContractError("field is not discretely convex")
    return np.min(np.prod(sd[:, ctx.pairs], axis=-1), axis=1)


def concavity_gap(ctx: OperatorContext, u: NodalField, w: NodalField, i: int,
                  tol=CONVEXITY_TOL) -> float:
    """``T[u+w]^(1/d) - T[u]^(1/d) - T[w]^(1/d)`` at node ``i`` (non-negative in theory)."""
    d = ctx.dim
    tu = max(product_form_T(ctx, u, i, tol), 0.0)
    tw = max(product_form_T(ctx, w, i, tol), 0.0)
    tuw = max(product_form_T(ctx, u + w, i, 2 * tol), 0.0)
    return tuw ** (1.0 / d) - tu ** (1.0 / d) - tw ** (1.0 / d)


def write_operator_csv(ctx: OperatorContext, field: NodalField, path):
    vals, k = apply_T_all(ctx, field, return_argmin=True)
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["node", "T_value", "argmin_tuple_index"])
        for i, t, a in zip(ctx.stencil.nodes, vals, k):
            wr.writerow([int(i), repr(float(t)), int(a)])


# -- matrix facts behind operator concavity --------------------------------


def det_root(A) -> float:
    A = np.asarray(A, dtype=float)
    return max(np.linalg.det(A), 0.0) ** (1.0 / A.shape[0])


def det_concavity_gap(A, B) -> float:
    """``det(A+B)^(1/d) - det(A)^(1/d) - det(B)^(1/d)``, >= 0 for SPSD A, B."""
    return det_root(np.asarray(A) + np.asarray(B)) - det_root(A) - det_root(B)


def trace_bound_gap(A, B) -> float:
    """``tr(AB)/d - det(A)^(1/d)``, >= 0 for SPSD A and SPD B with det B = 1."""
    A = np.asarray(A, dtype=float)
    return float(np.trace(A @ np.asarray(B))) / A.shape[0] - det_root(A)
