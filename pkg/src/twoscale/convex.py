"""Convex envelopes of P1 fields, lower contact sets and nodal subdifferentials.

The envelope is the lower convex hull of the lifted nodes ``(x_i, w_i)``;
on the convex computational domain it equals the maximum of the planes
spanned by the downward-facing hull facets.  At a hull vertex the
subdifferential is the convex hull of the gradients of its incident facets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import ContractError
from .mesh import TriMesh, classify_delta_interior
from .operator import OperatorContext, product_form_T
from .pwl import NodalField

CONTACT_TOL = 1e-10
_LOWER_NZ = 1e-12


def convex_hull_2d(points) -> np.ndarray:
    """Counterclockwise hull vertices (monotone chain, collinear points dropped)."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polygon_area(poly) -> float:
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def rectangle_polygon(v, a, b) -> np.ndarray:
    """Vertices of ``{p : a_j <= p.v_j <= b_j}`` for an orthonormal pair ``v`` (rows)."""
    v = np.asarray(v, dtype=float)
    corners = [(a[0], a[1]), (b[0], a[1]), (b[0], b[1]), (a[0], b[1])]
    return np.array([c0 * v[0] + c1 * v[1] for c0, c1 in corners])


@dataclass(eq=False)
class ConvexEnvelopeResult:
    mesh: TriMesh
    field_values: np.ndarray
    values: np.ndarray
    contact: np.ndarray
    planes: np.ndarray
    polygons: dict = field(default_factory=dict)
    areas: dict = field(default_factory=dict)
    degenerate: bool = False

    @property
    def envelope_field(self) -> NodalField:
        return NodalField(self.mesh, self.values.copy())

    def evaluate(self, points) -> np.ndarray:
        """Envelope at arbitrary points of the computational domain."""
        return _max_planes(self.planes, np.atleast_2d(points))

    def in_contact(self, i) -> bool:
        return i in self.areas


def _max_planes(planes, pts, chunk=2048):
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk]
        out[s:s + chunk] = np.max(p @ planes[:, :2].T + planes[:, 2][None], axis=1)
    return out


def _affine_fit(x, w):
    A = np.column_stack([x, np.ones(len(x))])
    coef, *_ = np.linalg.lstsq(A, w, rcond=None)
    return coef, np.max(np.abs(A @ coef - w))


def convex_envelope(mesh: TriMesh, field: NodalField | np.ndarray, tol=CONTACT_TOL) -> ConvexEnvelopeResult:
    w = np.asarray(field.values if isinstance(field, NodalField) else field, dtype=float)
    x = mesh.nodes
    scale = 1.0 + float(np.max(np.abs(w)))
    interior = np.nonzero(~mesh.boundary)[0]
    coef, resid = _affine_fit(x, w)
    hull = None
    if resid > 1e-12 * scale:
        try:
            hull = ConvexHull(np.column_stack([x, w]))
        except QhullError:
            if resid > 1e-9 * scale:
                raise
    if hull is None:
        planes = coef[None, :]
        vals = x @ coef[:2] + coef[2]
        grad = coef[:2][None]
        polys = {int(i): grad.copy() for i in interior}
        return ConvexEnvelopeResult(mesh, w, vals, interior, planes, polys,
                                    {int(i): 0.0 for i in interior}, degenerate=True)

    eq = hull.equations
    lower = eq[:, 2] < -_LOWER_NZ
    nz = eq[lower, 2]
    planes = np.column_stack([-eq[lower, 0] / nz, -eq[lower, 1] / nz, -eq[lower, 3] / nz])
    simp = hull.simplices[lower]

    vals = np.minimum(_max_planes(planes, x), w)
    contact = interior[np.abs(vals[interior] - w[interior]) <= tol * scale]

    # incident lower facets per vertex
    flat_nodes = simp.ravel()
    flat_face = np.repeat(np.arange(len(simp)), 3)
    order = np.argsort(flat_nodes, kind="stable")
    starts = np.searchsorted(flat_nodes[order], np.arange(len(x) + 1))
    polys, areas = {}, {}
    for i in contact:
        faces = flat_face[order[starts[i]:starts[i + 1]]]
        if len(faces) == 0:
            # contact node lying on a facet or edge: active planes only
            act = planes[:, :2] @ x[i] + planes[:, 2] >= vals[i] - tol * scale
            grads = planes[act, :2]
        else:
            grads = planes[faces, :2]
        poly = convex_hull_2d(grads)
        polys[int(i)] = poly
        areas[int(i)] = polygon_area(poly)
    return ConvexEnvelopeResult(mesh, w, vals, contact, planes, polys, areas)


def subdifferential_measure(result: ConvexEnvelopeResult, i: int) -> float:
    if i not in result.areas:
        raise ContractError(f"node {i} is not in the lower contact set")
    return result.areas[i]


def check_hyper_rectangle_bound(ctx: OperatorContext, result: ConvexEnvelopeResult, i: int):
    """``(|dGamma(x_i)|, dhat^d * min_v prod sd(Gamma; v))`` at a delta-interior contact node."""
    if i not in result.areas:
        raise ContractError(f"node {i} is not in the lower contact set")
    r = ctx.stencil.row_of[i]
    inner = getattr(ctx, "_delta_inner", None)
    if inner is None:
        inner = set(classify_delta_interior(ctx.mesh, ctx.delta)[0].tolist())
        ctx._delta_inner = inner
    if r < 0 or i not in inner:
        raise ContractError(f"node {i} is not in the delta-interior region")
    lhs = result.areas[i]
    rhs = ctx.stencil.delta_hat[r] ** ctx.dim * product_form_T(ctx, result.envelope_field, i)
    return lhs, rhs


def alexandroff_check(mesh: TriMesh, field: NodalField, result: ConvexEnvelopeResult | None = None,
                      dim=2):
    """``(max w^-, sum_contact |dGamma|, ratio)`` with ``ratio = lhs / rhs_sum^(1/d)``."""
    w = field.values
    if np.any(w[mesh.boundary] < -1e-12):
        raise ContractError("field must be non-negative on boundary nodes")
    result = result if result is not None else convex_envelope(mesh, field)
    lhs = float(np.max(np.maximum(-w, 0.0)))
    rhs_sum = float(sum(result.areas.values()))
    if lhs == 0.0:
        ratio = 0.0
    elif rhs_sum == 0.0:
        ratio = float("inf")
    else:
        ratio = lhs / rhs_sum ** (1.0 / dim)
    return lhs, rhs_sum, ratio


def contact_second_difference_check(ctx: OperatorContext, field: NodalField,
                                    result: ConvexEnvelopeResult, tol=1e-9):
    """Contact nodes/directions where ``sd(Gamma) > sd(w) + tol``; expected empty.

    The envelope is evaluated exactly at the stencil endpoints.
    """
    st = ctx.stencil
    rows = st.row_of[result.contact]
    rows = rows[rows >= 0]
    if len(rows) == 0:
        return []
    n, m = len(rows), st.n_directions
    dh2 = st.delta_hat[rows][:, None] ** 2
    gp = result.evaluate(st.plus_points[rows].reshape(-1, 2)).reshape(n, m)
    gm = result.evaluate(st.minus_points[rows].reshape(-1, 2)).reshape(n, m)
    g0 = result.values[st.nodes[rows]][:, None]
    sd_env = (gp - 2.0 * g0 + gm) / dh2
    w = field.values
    ends = np.einsum("njk,njk->nj", st.ep_weights[rows], w[st.ep_nodes[rows]])
    sd_w = (ends - 2.0 * w[st.nodes[rows]][:, None]) / dh2
    bad_r, bad_j = np.nonzero(sd_env > sd_w + tol)
    return [(int(st.nodes[rows[a]]), int(j), float(sd_env[a, j]), float(sd_w[a, j]))
            for a, j in zip(bad_r, bad_j)]


def write_diagnostic_json(path, name, lhs, rhs, ratio=None, nodes=None):
    payload = {"check": name, "lhs": lhs, "rhs": rhs, "ratio": ratio, "nodes": nodes or []}
    Path(path).write_text(json.dumps(payload, indent=2))
