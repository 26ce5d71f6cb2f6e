"""Continuous piecewise linear fields and two-scale second differences."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .directions import DirectionSet
from .errors import InternalConsistencyError, InvalidParameterError
from .mesh import TriMesh, locate_point, locate_points, node_boundary_distance


@dataclass(eq=False)
class NodalField:
    """An element of the P1 space: one value per mesh node."""

    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_nodes,):
            raise InvalidParameterError(
                f"expected {self.mesh.n_nodes} nodal values, got shape {self.values.shape}")

    def copy(self) -> NodalField:
        return NodalField(self.mesh, self.values.copy())

    def __add__(self, other):
        return NodalField(self.mesh, self.values + _vals(other))

    def __sub__(self, other):
        return NodalField(self.mesh, self.values - _vals(other))

    def __mul__(self, s):
        return NodalField(self.mesh, self.values * float(s))

    __rmul__ = __mul__

    def __neg__(self):
        return NodalField(self.mesh, -self.values)


def _vals(x):
    return x.values if isinstance(x, NodalField) else x


def interpolate(mesh: TriMesh, u) -> NodalField:
    """Nodal interpolant.  ``u`` maps an ``(n, 2)`` array of points to ``(n,)`` values."""
    vals = np.asarray(u(mesh.nodes), dtype=float)
    if vals.ndim == 0:
        vals = np.full(mesh.n_nodes, float(vals))
    return NodalField(mesh, vals)


def evaluate(field: NodalField, p, hint=None) -> float:
    loc = locate_point(field.mesh, p, hint=hint)
    return float(loc.bary @ field.values[field.mesh.elements[loc.element]])


def evaluate_many(field: NodalField, points) -> np.ndarray:
    elem, bary = locate_points(field.mesh, points)
    return np.einsum("ni,ni->n", bary, field.values[field.mesh.elements[elem]])


def write_field_csv(field: NodalField, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_index", "x", "y", "value"])
        for i, ((x, y), v) in enumerate(zip(field.mesh.nodes, field.values)):
            w.writerow([i, repr(float(x)), repr(float(y)), repr(float(v))])


def read_field_csv(mesh: TriMesh, path) -> NodalField:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    vals = np.empty(mesh.n_nodes)
    for r in rows:
        vals[int(r["node_index"])] = float(r["value"])
    return NodalField(mesh, vals)


@dataclass(eq=False)
class SecondDiffStencil:
    """Cached endpoint data for ``x_i +- dhat_i v_j`` over interior nodes.

    Rows follow ``nodes`` (interior node indices in increasing order);
    ``dhat_i = min(delta, dist(x_i, boundary))``.
    """

    mesh: TriMesh
    directions: DirectionSet
    delta: float
    nodes: np.ndarray
    delta_hat: np.ndarray
    plus_points: np.ndarray
    minus_points: np.ndarray
    plus_elem: np.ndarray
    minus_elem: np.ndarray
    plus_bary: np.ndarray
    minus_bary: np.ndarray
    row_of: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.row_of = -np.ones(self.mesh.n_nodes, dtype=np.int64)
        self.row_of[self.nodes] = np.arange(len(self.nodes))
        els = self.mesh.elements
        self.ep_nodes = np.ascontiguousarray(
            np.concatenate([els[self.plus_elem], els[self.minus_elem]], axis=2))
        self.ep_weights = np.ascontiguousarray(
            np.concatenate([self.plus_bary, self.minus_bary], axis=2))
        self.self_weight = np.sum(
            np.where(self.ep_nodes == self.nodes[:, None, None], self.ep_weights, 0.0), axis=2)
        n, m, _ = self.ep_nodes.shape
        rows = np.repeat(np.arange(n * m), 6)
        self.endpoint_matrix = sp.csr_matrix(
            (self.ep_weights.ravel(), (rows, self.ep_nodes.ravel())), shape=(n * m, self.mesh.n_nodes))

    @property
    def n_directions(self) -> int:
        return len(self.directions)

    def endpoint_sums(self, values) -> np.ndarray:
        """``w(x_i + dhat v_j) + w(x_i - dhat v_j)`` as an ``(n_int, m)`` array."""
        return (self.endpoint_matrix @ values).reshape(len(self.nodes), -1)


def build_stencils(mesh: TriMesh, dirs: DirectionSet, delta: float) -> SecondDiffStencil:
    if not delta > 0:
        raise InvalidParameterError("delta must be positive")
    nodes = mesh.interior_nodes
    dist = node_boundary_distance(mesh)[nodes]
    if np.any(dist <= 0):
        raise InternalConsistencyError("interior node on the boundary polygon")
    dhat = np.minimum(delta, dist)
    v = dirs.vectors
    x = mesh.nodes[nodes]
    off = dhat[:, None, None] * v[None]
    plus = x[:, None, :] + off
    minus = x[:, None, :] - off
    n, m = len(nodes), len(v)
    pe, pb = locate_points(mesh, plus.reshape(-1, 2))
    me, mb = locate_points(mesh, minus.reshape(-1, 2))
    return SecondDiffStencil(
        mesh, dirs, float(delta), nodes, dhat, plus, minus,
        pe.reshape(n, m), me.reshape(n, m), pb.reshape(n, m, 3), mb.reshape(n, m, 3))


def second_differences(field: NodalField, stencil: SecondDiffStencil) -> np.ndarray:
    """All centred second differences, shape ``(n_interior, n_directions)``."""
    w = field.values
    s = stencil.endpoint_sums(w)
    return (s - 2.0 * w[stencil.nodes][:, None]) / stencil.delta_hat[:, None] ** 2


def second_difference(field: NodalField, stencil: SecondDiffStencil, node: int, direction: int) -> float:
    r = stencil.row_of[node]
    if r < 0:
        raise InvalidParameterError(f"node {node} is not an interior node")
    w = field.values
    ends = np.dot(stencil.ep_weights[r, direction], w[stencil.ep_nodes[r, direction]])
    return float((ends - 2.0 * w[node]) / stencil.delta_hat[r] ** 2)


def exact_second_differences(u, stencil: SecondDiffStencil) -> np.ndarray:
    """Second differences of a function evaluated pointwise (no interpolation)."""
    n, m, _ = stencil.plus_points.shape
    up = np.asarray(u(stencil.plus_points.reshape(-1, 2))).reshape(n, m)
    um = np.asarray(u(stencil.minus_points.reshape(-1, 2))).reshape(n, m)
    u0 = np.asarray(u(stencil.mesh.nodes[stencil.nodes]))
    return (up - 2.0 * u0[:, None] + um) / stencil.delta_hat[:, None] ** 2
