"""Finite direction sets and orthonormal direction pairs in the plane."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


def unit(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    return np.stack([np.cos(phi), np.sin(phi)], axis=-1)


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Unit vectors stored over the half circle ``[0, pi)``.

    Second differences are even in the direction, so ``v`` and ``-v`` are the
    same stencil direction.  ``theta`` is ``None`` for hand-picked sets that do
    not claim a covering radius.
    """

    theta: float | None
    angles: np.ndarray

    @property
    def vectors(self) -> np.ndarray:
        return unit(self.angles)

    def __len__(self):
        return len(self.angles)

    @classmethod
    def from_angles(cls, angles, theta=None):
        a = np.mod(np.asarray(angles, dtype=float), math.pi)
        return cls(theta, a)


@dataclass(frozen=True, eq=False)
class OrthoTupleSet:
    """Orthonormal pairs ``(v, v_perp)``; ``pairs`` index into ``directions``."""

    directions: DirectionSet
    pairs: np.ndarray

    @property
    def theta(self):
        return self.directions.theta

    @property
    def tuples(self) -> np.ndarray:
        """Array of shape ``(K, 2, 2)``: tuple, component, coordinate."""
        return self.directions.vectors[self.pairs]

    def __len__(self):
        return len(self.pairs)


def direction_count(theta: float) -> int:
    m = math.ceil(math.pi / theta - 1e-12)
    return m + (m % 2)


def build_direction_set(theta: float) -> DirectionSet:
    """Equispaced directions ``k*pi/m`` whose chord covering radius is at most ``theta``.

    ``m`` is ``ceil(pi/theta)`` rounded up to an even number so that each
    direction's perpendicular is also in the set.
    """
    if not (0.0 < theta <= 1.0):
        raise InvalidParameterError(f"theta must lie in (0, 1], got {theta}")
    m = direction_count(theta)
    return DirectionSet(float(theta), math.pi * np.arange(m) / m)


def build_ortho_tuples(dirs: DirectionSet) -> OrthoTupleSet:
    m = len(dirs)
    ang = dirs.angles
    pairs = []
    for k in range(m):
        if ang[k] >= math.pi / 2 - 1e-14:
            continue
        target = ang[k] + math.pi / 2
        j = int(np.argmin(np.abs(ang - target)))
        if abs(ang[j] - target) > 1e-12:
            raise InvalidParameterError("direction set is not closed under rotation by pi/2")
        pairs.append((k, j))
    return OrthoTupleSet(dirs, np.asarray(pairs, dtype=np.int64).reshape(-1, 2))


def axes_tuple_set() -> OrthoTupleSet:
    """The single coordinate-axes pair (no angular discretisation)."""
    return OrthoTupleSet(DirectionSet.from_angles([0.0, math.pi / 2]), np.array([[0, 1]]))


def tuple_set(theta: float | None) -> OrthoTupleSet:
    return axes_tuple_set() if theta is None else build_ortho_tuples(build_direction_set(theta))


def covering_radius(dirs: DirectionSet, samples: np.ndarray) -> float:
    """Max over sample unit vectors of the chord distance to the nearest ``+-v``."""
    v = dirs.vectors
    d = np.minimum(
        np.linalg.norm(samples[:, None] - v[None], axis=-1),
        np.linalg.norm(samples[:, None] + v[None], axis=-1),
    )
    return float(d.min(axis=1).max())


def tuple_covering_radius(tuples: OrthoTupleSet, frames: np.ndarray) -> float:
    """Max over sample orthonormal frames ``(n, 2, 2)`` of the componentwise chord
    distance to the closest stored pair, up to sign and ordering of components."""
    t = tuples.tuples
    best = np.full(len(frames), np.inf)
    for order in ((0, 1), (1, 0)):
        tt = t[:, order]
        # each component may flip sign independently
        dist = np.minimum(
            np.linalg.norm(frames[:, None] - tt[None], axis=-1),
            np.linalg.norm(frames[:, None] + tt[None], axis=-1),
        )
        best = np.minimum(best, dist.max(axis=-1).min(axis=1))
    return float(best.max())
