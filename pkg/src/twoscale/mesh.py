"""Triangulations of convex planar domains and queries on them.

Meshes are built with every boundary node on the analytic boundary, so the
computational domain (union of elements) is a convex polygon inscribed in
the domain.  All queries (point location, distance to the boundary polygon,
delta-interior classification) are read-only.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import InvalidParameterError, MeshValidationError, OutOfDomainError

logger = logging.getLogger(__name__)

BARY_TOL = 1e-12
SNAP_TOL = 1e-10


@dataclass(frozen=True)
class DomainSpec:
    """A convex domain: ``disk``, ``ellipse`` (semi-axes a, b) or ``polygon``.

    Polygon vertices must be listed counterclockwise and form a convex polygon.
    """

    kind: str
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    vertices: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse", "polygon"):
            raise InvalidParameterError(f"unknown domain kind {self.kind!r}")
        if self.kind == "disk" and self.radius <= 0:
            raise InvalidParameterError("disk radius must be positive")
        if self.kind == "ellipse" and (self.a <= 0 or self.b <= 0):
            raise InvalidParameterError("ellipse semi-axes must be positive")
        if self.kind == "polygon":
            if self.vertices is None or len(self.vertices) < 3:
                raise InvalidParameterError("polygon needs at least 3 vertices")
            v = np.asarray(self.vertices, dtype=float)
            e = np.roll(v, -1, axis=0) - v
            turn = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
            if np.any(turn <= 0):
                raise InvalidParameterError("polygon must be strictly convex and counterclockwise")

    @classmethod
    def disk(cls, radius=1.0, center=(0.0, 0.0)):
        return cls("disk", center=tuple(center), radius=float(radius))

    @classmethod
    def ellipse(cls, a, b, center=(0.0, 0.0)):
        return cls("ellipse", center=tuple(center), a=float(a), b=float(b))

    @classmethod
    def polygon(cls, vertices):
        vs = tuple((float(x), float(y)) for x, y in vertices)
        c = tuple(np.mean(np.asarray(vs), axis=0))
        return cls("polygon", center=c, vertices=vs)

    # -- geometry ---------------------------------------------------------

    def _polygon_arrays(self):
        v = np.asarray(self.vertices, dtype=float)
        return v, np.roll(v, -1, axis=0)

    def perimeter(self) -> float:
        if self.kind == "disk":
            return 2.0 * math.pi * self.radius
        if self.kind == "ellipse":
            t, s = self._ellipse_arclength_table()
            return float(s[-1])
        a, b = self._polygon_arrays()
        return float(np.linalg.norm(b - a, axis=1).sum())

    def diameter(self) -> float:
        if self.kind == "disk":
            return 2.0 * self.radius
        if self.kind == "ellipse":
            return 2.0 * max(self.a, self.b)
        v = np.asarray(self.vertices)
        return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=-1)))

    def _ellipse_arclength_table(self, n=1 << 16):
        t = np.linspace(0.0, 2.0 * math.pi, n + 1)
        speed = np.hypot(self.a * np.sin(t), self.b * np.cos(t))
        s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(t))])
        return t, s

    def boundary_points(self, n: int) -> np.ndarray:
        """``n`` points on the boundary, equispaced in arc length, counterclockwise."""
        c = np.asarray(self.center, dtype=float)
        if self.kind == "disk":
            phi = 2.0 * math.pi * np.arange(n) / n
            return c + self.radius * np.column_stack([np.cos(phi), np.sin(phi)])
        if self.kind == "ellipse":
            t, s = self._ellipse_arclength_table()
            target = s[-1] * np.arange(n) / n
            tk = np.interp(target, s, t)
            return c + np.column_stack([self.a * np.cos(tk), self.b * np.sin(tk)])
        a, b = self._polygon_arrays()
        lengths = np.linalg.norm(b - a, axis=1)
        # corners are always nodes; remaining nodes spread by edge length
        counts = np.maximum(1, np.round(n * lengths / lengths.sum()).astype(int))
        pts = []
        for p, q, k in zip(a, b, counts):
            frac = np.arange(k) / k
            pts.append(p + frac[:, None] * (q - p))
        return np.concatenate(pts)

    def boundary_residual(self, points) -> np.ndarray:
        """Approximate distance of points to the analytic boundary."""
        p = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.center)
        if self.kind == "disk":
            return np.abs(np.hypot(p[:, 0], p[:, 1]) - self.radius)
        if self.kind == "ellipse":
            F = (p[:, 0] / self.a) ** 2 + (p[:, 1] / self.b) ** 2 - 1.0
            grad = 2.0 * np.hypot(p[:, 0] / self.a**2, p[:, 1] / self.b**2)
            return np.abs(F) / np.maximum(grad, 1e-300)
        a, b = self._polygon_arrays()
        return segment_distance(np.atleast_2d(np.asarray(points, float)), a, b)

    def inside_distance(self, points, resolution=1e-3) -> np.ndarray:
        """Signed distance to the boundary, positive inside (ellipse: approximate)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        c = np.asarray(self.center)
        if self.kind == "disk":
            return self.radius - np.hypot(*(p - c).T)
        if self.kind == "polygon":
            a, b = self._polygon_arrays()
            e = b - a
            nrm = np.linalg.norm(e, axis=1)
            cross = (e[:, 0][None] * (p[:, 1][:, None] - a[:, 1][None])
                     - e[:, 1][None] * (p[:, 0][:, None] - a[:, 0][None]))
            return np.min(cross / nrm[None], axis=1)
        n = max(2048, int(self.perimeter() / resolution))
        dense = self.boundary_points(n)
        d, _ = cKDTree(dense).query(p)
        q = p - c
        inside = (q[:, 0] / self.a) ** 2 + (q[:, 1] / self.b) ** 2 <= 1.0
        return np.where(inside, d, -d)


def segment_distance(points, a, b, chunk=4096) -> np.ndarray:
    """Minimum Euclidean distance from each point to the segments [a_k, b_k]."""
    points = np.atleast_2d(points)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    e = b - a
    ee = np.einsum("ij,ij->i", e, e)
    out = np.empty(len(points))
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk]
        w = p[:, None, :] - a[None]
        t = np.clip(np.einsum("nkj,kj->nk", w, e) / ee[None], 0.0, 1.0)
        diff = w - t[..., None] * e[None]
        out[s:s + chunk] = np.sqrt(np.min(np.einsum("nkj,nkj->nk", diff, diff), axis=1))
    return out


@dataclass(frozen=True)
class PointLocation:
    element: int
    bary: np.ndarray


@dataclass(eq=False)
class TriMesh:
    """Conforming triangulation with counterclockwise elements.

    ``neighbors[e, k]`` is the element across the edge opposite local vertex
    ``k`` (``-1`` on the boundary).  Treat instances as immutable.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary: np.ndarray
    domain: DomainSpec | None = None
    neighbors: np.ndarray = field(init=False, repr=False)
    boundary_loop: np.ndarray = field(init=False, repr=False)
    h: float = field(init=False)
    shape_regularity: float = field(init=False)
    quasi_uniformity: float = field(init=False)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.elements = np.array(self.elements, dtype=np.int64)
        self.boundary = np.asarray(self.boundary, dtype=bool)
        p = self.nodes[self.elements]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        flip = area2 < 0
        if np.any(flip):
            self.elements[flip] = self.elements[flip][:, [0, 2, 1]]
            p = self.nodes[self.elements]
        self._compute_quality(p)
        self.neighbors, self.boundary_loop = _topology(self.elements, len(self.nodes))
        self._build_locator(p)

    def _compute_quality(self, p):
        la = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
        lb = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
        lc = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        self.areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        diam = np.maximum(np.maximum(la, lb), lc)
        self.h = float(diam.max())
        self.quasi_uniformity = float(diam.min() / self.h)
        with np.errstate(divide="ignore", invalid="ignore"):
            circ = la * lb * lc / (4.0 * self.areas)
            inr = 2.0 * self.areas / (la + lb + lc)
            self.shape_regularity = float(np.max(circ / inr))

    def _build_locator(self, p):
        # affine maps to barycentric coordinates (l1, l2)
        M = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
        inv = np.empty_like(M)
        inv[:, 0, 0] = M[:, 1, 1] / det
        inv[:, 0, 1] = -M[:, 0, 1] / det
        inv[:, 1, 0] = -M[:, 1, 0] / det
        inv[:, 1, 1] = M[:, 0, 0] / det
        self._origin_pts = p[:, 0].copy()
        self._inv = inv

        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        cell = max(self.h / 1.5, 1e-12)
        ncell = np.maximum(1, np.ceil((hi - lo) / cell).astype(int))
        self._grid = (lo, cell, ncell)
        bmin = np.floor((p.min(axis=1) - lo) / cell).astype(int)
        bmax = np.floor((p.max(axis=1) - lo) / cell).astype(int)
        bmin = np.clip(bmin, 0, ncell - 1)
        bmax = np.clip(bmax, 0, ncell - 1)
        cells, elems = [], []
        span = bmax - bmin + 1
        for dx in range(int(span[:, 0].max())):
            for dy in range(int(span[:, 1].max())):
                ok = (dx < span[:, 0]) & (dy < span[:, 1])
                idx = np.nonzero(ok)[0]
                cells.append((bmin[idx, 0] + dx) * ncell[1] + bmin[idx, 1] + dy)
                elems.append(idx)
        cells = np.concatenate(cells)
        elems = np.concatenate(elems)
        order = np.argsort(cells, kind="stable")
        self._cell_elems = elems[order]
        self._cell_start = np.searchsorted(cells[order], np.arange(ncell[0] * ncell[1] + 1))

    # -- convenience ------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def interior_nodes(self) -> np.ndarray:
        return np.nonzero(~self.boundary)[0]

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.nonzero(self.boundary)[0]

    @property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    def boundary_segments(self):
        loop = self.boundary_loop
        return self.nodes[loop], self.nodes[np.roll(loop, -1)]

    def barycentric(self, elems, points) -> np.ndarray:
        d = np.asarray(points, float) - self._origin_pts[elems]
        l12 = np.einsum("nij,nj->ni", self._inv[elems], d)
        return np.column_stack([1.0 - l12[:, 0] - l12[:, 1], l12])

    def point_from_bary(self, elem, bary) -> np.ndarray:
        return np.asarray(bary) @ self.nodes[self.elements[elem]]


def _topology(elements, n_nodes):
    """Neighbor table and the counterclockwise boundary node loop."""
    m = len(elements)
    a = elements[:, [1, 2, 0]].ravel()
    b = elements[:, [2, 0, 1]].ravel()
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    key = lo * n_nodes + hi
    order = np.argsort(key, kind="stable")
    ks = key[order]
    uniq, start, counts = np.unique(ks, return_index=True, return_counts=True)
    if np.any(counts > 2):
        raise MeshValidationError("non-conforming mesh: an edge is shared by more than two elements")
    neighbors = -np.ones(3 * m, dtype=np.int64)
    pairs = start[counts == 2]
    e0 = order[pairs]
    e1 = order[pairs + 1]
    neighbors[e0] = e1 // 3
    neighbors[e1] = e0 // 3
    neighbors = neighbors.reshape(m, 3)

    single = order[start[counts == 1]]
    nxt = dict(zip(a[single].tolist(), b[single].tolist()))
    if len(nxt) != len(single):
        raise MeshValidationError("boundary edges do not form a simple loop")
    first = next(iter(nxt))
    loop = [first]
    cur = nxt[first]
    while cur != first:
        loop.append(cur)
        cur = nxt.get(cur)
        if cur is None or len(loop) > len(nxt):
            raise MeshValidationError("boundary edges do not form a single closed loop")
    if len(loop) != len(nxt):
        raise MeshValidationError("boundary has more than one component")
    return neighbors, np.asarray(loop, dtype=np.int64)


def validate_mesh(mesh: TriMesh, domain: DomainSpec | None = None, boundary_tol=1e-12):
    """Raise :class:`MeshValidationError` unless every mesh invariant holds."""
    if np.any(mesh.areas <= 0):
        raise MeshValidationError("element with non-positive area")
    used = np.zeros(mesh.n_nodes, bool)
    used[mesh.elements.ravel()] = True
    if not used.all():
        raise MeshValidationError("mesh has unreferenced nodes")
    on_loop = np.zeros(mesh.n_nodes, bool)
    on_loop[mesh.boundary_loop] = True
    if np.any(on_loop != mesh.boundary):
        raise MeshValidationError("boundary flags disagree with the boundary edge loop")
    pa, pb = mesh.boundary_segments()
    e = pb - pa
    en = np.roll(e, -1, axis=0)
    turn = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
    scale = np.linalg.norm(e, axis=1) * np.linalg.norm(en, axis=1)
    if np.any(turn < -1e-12 * scale):
        raise MeshValidationError("computational domain is not convex")
    domain = domain if domain is not None else mesh.domain
    if domain is not None:
        res = domain.boundary_residual(mesh.nodes[mesh.boundary])
        if res.max() > boundary_tol:
            raise MeshValidationError(f"boundary node off the domain boundary by {res.max():.3e}")


def generate_mesh(domain: DomainSpec, h_target: float, jitter=0.1, seed=0) -> TriMesh:
    """Quasi-uniform triangulation with boundary nodes equispaced on the boundary.

    Interior nodes come from a jittered equilateral lattice clipped away from
    the boundary; the domain centre is always a node.  The node set is then
    Delaunay-triangulated.
    """
    if not h_target > 0:
        raise InvalidParameterError("h_target must be positive")
    spacing = h_target / 1.3
    perimeter = domain.perimeter()
    nb = int(round(perimeter / spacing))
    if nb < 3:
        raise InvalidParameterError(f"h_target={h_target} too large: fewer than 3 boundary nodes")
    nb = max(nb, 8)
    bpts = domain.boundary_points(nb)
    nb = len(bpts)
    spacing_b = perimeter / nb

    rng = np.random.default_rng(seed)
    lo = bpts.min(axis=0)
    hi = bpts.max(axis=0)
    s = spacing
    dy = s * math.sqrt(3.0) / 2.0
    ys = np.arange(lo[1] + 0.5 * dy, hi[1], dy)
    rows = []
    for r, y in enumerate(ys):
        xs = np.arange(lo[0] + (0.5 * s if r % 2 else 0.0), hi[0] + s, s)
        rows.append(np.column_stack([xs, np.full_like(xs, y)]))
    lattice = np.concatenate(rows)
    # centre the lattice on the domain so refinements are self-similar
    ic = np.argmin(np.linalg.norm(lattice - domain.center, axis=1))
    lattice += np.asarray(domain.center) - lattice[ic]
    rad = jitter * s * np.sqrt(rng.random(len(lattice)))
    rad[ic] = 0.0  # the domain centre stays a node
    ang = 2.0 * math.pi * rng.random(len(lattice))
    lattice += rad[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
    margin = 0.5 * max(s, spacing_b)
    dist = domain.inside_distance(lattice, resolution=s / 50.0)
    interior = lattice[dist >= margin]

    nodes = np.concatenate([bpts, interior])
    boundary = np.zeros(len(nodes), bool)
    boundary[:nb] = True
    tri = Delaunay(nodes)
    elems = tri.simplices.astype(np.int64)
    p = nodes[elems]
    area2 = np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                   - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    keep = area2 > 1e-12 * s * s
    if not keep.all():
        logger.warning("dropping %d degenerate Delaunay simplices", int((~keep).sum()))
        elems = elems[keep]
    mesh = TriMesh(nodes, elems, boundary, domain=domain)
    validate_mesh(mesh, domain)
    logger.debug("mesh: %d nodes, %d elements, h=%.4g", mesh.n_nodes, mesh.n_elements, mesh.h)
    return mesh


def square_grid_mesh(n: int, half_width=1.0) -> TriMesh:
    """Structured mesh of ``[-L, L]^2`` with ``2n`` cells per side.

    Each cell is split along the diagonal that points away from the origin,
    so the lines ``|x1| = |x2|`` are unions of mesh edges.
    """
    if n < 1:
        raise InvalidParameterError("n must be positive")
    L = float(half_width)
    t = np.linspace(-L, L, 2 * n + 1)
    X, Y = np.meshgrid(t, t, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange(len(nodes)).reshape(2 * n + 1, 2 * n + 1)
    elems = []
    for i in range(2 * n):
        for j in range(2 * n):
            a, b, c, d = idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]
            if (i - n + 0.5) * (j - n + 0.5) > 0:
                elems += [(a, b, c), (a, c, d)]
            else:
                elems += [(a, b, d), (b, c, d)]
    boundary = (np.abs(np.abs(nodes[:, 0]) - L) < 1e-14) | (np.abs(np.abs(nodes[:, 1]) - L) < 1e-14)
    nodes[np.abs(nodes) < 1e-15] = 0.0
    dom = DomainSpec.polygon([(-L, -L), (L, -L), (L, L), (-L, L)])
    mesh = TriMesh(nodes, np.array(elems), boundary, domain=dom)
    validate_mesh(mesh, dom)
    return mesh


# -- point location -------------------------------------------------------


def _outside_distance(mesh: TriMesh, points):
    """Distance outside the boundary polygon (0 for points inside)."""
    pa, pb = mesh.boundary_segments()
    e = pb - pa
    cross = (e[:, 0][None] * (points[:, 1][:, None] - pa[:, 1][None])
             - e[:, 1][None] * (points[:, 0][:, None] - pa[:, 0][None]))
    outside = np.any(cross < 0, axis=1)
    d = np.zeros(len(points))
    if outside.any():
        d[outside] = segment_distance(points[outside], pa, pb)
    return d


def _project_to_boundary(mesh: TriMesh, points):
    pa, pb = mesh.boundary_segments()
    e = pb - pa
    ee = np.einsum("ij,ij->i", e, e)
    w = points[:, None, :] - pa[None]
    t = np.clip(np.einsum("nkj,kj->nk", w, e) / ee[None], 0.0, 1.0)
    proj = pa[None] + t[..., None] * e[None]
    d2 = np.sum((points[:, None, :] - proj) ** 2, axis=2)
    k = np.argmin(d2, axis=1)
    return proj[np.arange(len(points)), k]


def locate_points(mesh: TriMesh, points, snap_tol=SNAP_TOL):
    """Vectorised point location through the bucket grid.

    Returns ``(elements, bary)``.  Points outside the mesh by at most
    ``snap_tol`` are projected onto the boundary polygon first.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(pts)
    elem = np.full(n, -1, dtype=np.int64)
    bary = np.zeros((n, 3))
    if n == 0:
        return elem, bary
    lo, cell, ncell = mesh._grid
    ij = np.floor((pts - lo) / cell).astype(np.int64)
    ij = np.clip(ij, 0, ncell - 1)
    c = ij[:, 0] * ncell[1] + ij[:, 1]
    starts = mesh._cell_start[c]
    counts = mesh._cell_start[c + 1] - starts
    q = np.repeat(np.arange(n), counts)
    offs = np.arange(len(q)) - np.repeat(np.cumsum(counts) - counts, counts)
    cand = mesh._cell_elems[np.repeat(starts, counts) + offs]
    b = mesh.barycentric(cand, pts[q])
    score = b.min(axis=1)
    # candidates of one query are contiguous; take the best one per group
    has = np.nonzero(counts > 0)[0]
    gstart = (np.cumsum(counts) - counts)[has]
    gmax = np.maximum.reduceat(score, gstart)
    hit = np.flatnonzero(score == np.repeat(gmax, counts[has]))
    first = hit[np.searchsorted(hit, gstart)]
    good = score[first] >= -BARY_TOL
    elem[has[good]] = cand[first[good]]
    bary[has[good]] = b[first[good]]

    missing = np.nonzero(elem < 0)[0]
    if len(missing):
        dout = _outside_distance(mesh, pts[missing])
        bad = dout > snap_tol
        if bad.any():
            k = missing[np.argmax(bad)]
            raise OutOfDomainError(f"point {pts[k].tolist()} lies outside the mesh by {dout.max():.3e}")
        snapped = _project_to_boundary(mesh, pts[missing])
        e2, b2 = locate_points(mesh, snapped, snap_tol=np.inf)
        elem[missing] = e2
        bary[missing] = b2
    return elem, bary


def locate_point(mesh: TriMesh, p, hint: int | None = None) -> PointLocation:
    """Locate one point by walking from ``hint``; falls back to the bucket grid."""
    p = np.asarray(p, dtype=float)
    if hint is not None and 0 <= hint < mesh.n_elements:
        e = int(hint)
        for _ in range(mesh.n_elements):
            b = mesh.barycentric(np.array([e]), p[None])[0]
            k = int(np.argmin(b))
            if b[k] >= -BARY_TOL:
                return PointLocation(e, b)
            nb = mesh.neighbors[e, k]
            if nb < 0:
                break
            e = int(nb)
    elem, bary = locate_points(mesh, p[None])
    return PointLocation(int(elem[0]), bary[0])


def boundary_distance(mesh: TriMesh, points) -> np.ndarray | float:
    """Euclidean distance from point(s) in the mesh to the boundary polygon."""
    pts = np.asarray(points, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    dout = _outside_distance(mesh, pts)
    if np.any(dout > SNAP_TOL):
        raise OutOfDomainError("point outside the computational domain")
    pa, pb = mesh.boundary_segments()
    d = np.where(dout > 0, 0.0, segment_distance(pts, pa, pb))
    return float(d[0]) if scalar else d


def node_boundary_distance(mesh: TriMesh) -> np.ndarray:
    """Boundary distance of every node, computed once per mesh."""
    d = getattr(mesh, "_node_dist", None)
    if d is None:
        d = boundary_distance(mesh, mesh.nodes)
        d[mesh.boundary] = 0.0
        d.flags.writeable = False
        mesh._node_dist = d
    return d


def classify_delta_interior(mesh: TriMesh, delta: float):
    """Split the interior nodes into the delta-interior set and the boundary layer.

    An element belongs to the delta-interior region when every point of it is
    at distance >= delta from the boundary polygon; distance to the boundary
    of a convex polygon is concave, so checking the three vertices suffices.
    A node is delta-interior when all elements around it are.
    """
    dist = node_boundary_distance(mesh)
    elem_ok = np.all(dist[mesh.elements] >= delta, axis=1)
    bad = np.zeros(mesh.n_nodes, bool)
    bad[mesh.elements[~elem_ok].ravel()] = True
    interior = ~mesh.boundary
    inner = np.nonzero(interior & ~bad)[0]
    layer = np.nonzero(interior & bad)[0]
    return inner, layer


# -- file format ----------------------------------------------------------


def write_mesh(mesh: TriMesh, path):
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"MESH2D {mesh.n_nodes} {mesh.n_elements}\n")
        for (x, y), flag in zip(mesh.nodes, mesh.boundary):
            fh.write(f"{float(x)!r} {float(y)!r} {int(flag)}\n")
        for i, j, k in mesh.elements:
            fh.write(f"{i} {j} {k}\n")


def read_mesh(path, domain: DomainSpec | None = None) -> TriMesh:
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0][0] != "MESH2D" or len(lines[0]) != 3:
        raise MeshValidationError("missing 'MESH2D <n_nodes> <n_elems>' header")
    nn, ne = int(lines[0][1]), int(lines[0][2])
    if len(lines) != 1 + nn + ne:
        raise MeshValidationError(f"expected {nn} node and {ne} element lines")
    node_rows = np.array([[float(t) for t in ln] for ln in lines[1:1 + nn]])
    elems = np.array([[int(t) for t in ln] for ln in lines[1 + nn:]], dtype=np.int64)
    if node_rows.shape != (nn, 3) or elems.shape != (ne, 3):
        raise MeshValidationError("malformed node or element line")
    if elems.min() < 0 or elems.max() >= nn:
        raise MeshValidationError("element references a missing node")
    mesh = TriMesh(node_rows[:, :2], elems, node_rows[:, 2] != 0, domain=domain)
    validate_mesh(mesh, domain)
    return mesh
