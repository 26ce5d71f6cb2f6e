"""Interior barrier: the interpolant of a paraboloid vanishing on a circumscribed circle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .mesh import TriMesh
from .pwl import NodalField, interpolate


@dataclass(eq=False)
class InteriorBarrier:
    center: np.ndarray
    radius_sq: float
    field: NodalField | None = None

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.radius_sq))

    def q(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (np.sum((x - self.center) ** 2, axis=-1) - self.radius_sq)


def build_interior_barrier(mesh: TriMesh, center=None, radius=None) -> InteriorBarrier:
    """``q_h = I_h q`` with ``q(x) = (|x - x0|^2 - R^2) / 2``.

    Defaults: ``x0`` is the domain centre (node centroid without a domain) and
    ``R`` the largest node distance from it.  Every second difference of
    ``q_h`` is at least 1 since the interpolant of a convex function lies above it.
    """
    if center is None:
        center = mesh.domain.center if mesh.domain is not None else mesh.nodes.mean(axis=0)
    c = np.asarray(center, dtype=float)
    dist_sq = np.sum((mesh.nodes - c) ** 2, axis=1)
    radius_sq = float(dist_sq.max()) if radius is None else float(radius) ** 2
    if dist_sq.max() > radius_sq * (1 + 1e-14):
        raise InvalidParameterError(
            f"radius {np.sqrt(radius_sq)} does not enclose the mesh (needs {np.sqrt(dist_sq.max())})")
    b = InteriorBarrier(c, radius_sq)
    b.field = interpolate(mesh, b.q)
    return b
