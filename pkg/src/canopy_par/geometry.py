"""Triangle meshes, rays and rigid transforms.

Coordinates: +x east, +y north, +z up, metres. Headings (azimuths) are
measured clockwise from north when viewed from above, so the horizontal unit
vector for heading ``a`` is ``(sin a, cos a)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

MIN_TRIANGLE_AREA = 1e-12
SURFACE_EPSILON = 1e-6


class Organ(enum.IntEnum):
    LEAF = 0
    STEM = 1
    GROUND = 2


class Aabb(NamedTuple):
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, points, tol=0.0):
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))


@dataclass(frozen=True)
class Triangle:
    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    plant_id: int
    organ: Organ
    primitive_id: int

    @property
    def area(self) -> float:
        return 0.5 * float(np.linalg.norm(np.cross(self.v1 - self.v0, self.v2 - self.v0)))


@dataclass
class Mesh:
    """Labelled triangle soup stored column-wise.

    ``vertices`` has shape (n, 3, 3); row ``i`` is triangle ``i`` and ``i`` is
    also its primitive id.
    """

    vertices: np.ndarray
    plant_id: np.ndarray = None
    organ: np.ndarray = None

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3, 3)
        n = len(self.vertices)
        if self.plant_id is None:
            self.plant_id = np.zeros(n, dtype=np.int64)
        if self.organ is None:
            self.organ = np.full(n, Organ.LEAF, dtype=np.int8)
        self.plant_id = np.broadcast_to(np.asarray(self.plant_id, dtype=np.int64), (n,)).copy()
        self.organ = np.broadcast_to(np.asarray(self.organ, dtype=np.int8), (n,)).copy()

    def __len__(self):
        return len(self.vertices)

    def __iter__(self) -> Iterator[Triangle]:
        for i in range(len(self)):
            yield self.triangle(i)

    def triangle(self, i: int) -> Triangle:
        v = self.vertices[i]
        return Triangle(v[0], v[1], v[2], int(self.plant_id[i]), Organ(int(self.organ[i])), i)

    @classmethod
    def empty(cls) -> "Mesh":
        return cls(np.zeros((0, 3, 3)))

    @classmethod
    def from_triangles(cls, triangles: Sequence[Triangle]) -> "Mesh":
        if not triangles:
            return cls.empty()
        verts = np.array([[t.v0, t.v1, t.v2] for t in triangles], dtype=float)
        return cls(verts, [t.plant_id for t in triangles], [int(t.organ) for t in triangles])

    @staticmethod
    def concat(meshes: Sequence["Mesh"]) -> "Mesh":
        meshes = [m for m in meshes if len(m)]
        if not meshes:
            return Mesh.empty()
        return Mesh(
            np.concatenate([m.vertices for m in meshes]),
            np.concatenate([m.plant_id for m in meshes]),
            np.concatenate([m.organ for m in meshes]),
        )

    def subset(self, mask) -> "Mesh":
        return Mesh(self.vertices[mask], self.plant_id[mask], self.organ[mask])

    def copy(self) -> "Mesh":
        return Mesh(self.vertices.copy(), self.plant_id.copy(), self.organ.copy())

    @property
    def cross(self) -> np.ndarray:
        v = self.vertices
        return np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.cross, axis=1)

    @property
    def normals(self) -> np.ndarray:
        c = self.cross
        n = np.linalg.norm(c, axis=1, keepdims=True)
        return c / np.where(n > 0, n, 1.0)

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices.mean(axis=1)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @property
    def bbox(self) -> Aabb:
        if not len(self):
            return Aabb(np.zeros(3), np.zeros(3))
        pts = self.vertices.reshape(-1, 3)
        return Aabb(pts.min(axis=0), pts.max(axis=0))

    def drop_degenerate(self) -> "Mesh":
        return self.subset(self.areas > MIN_TRIANGLE_AREA)


@dataclass(frozen=True)
class Ray:
    """Parametric ray ``r(s) = origin + s * direction``."""

    origin: np.ndarray
    direction: np.ndarray
    t_min: float = 0.0
    t_max: float = np.inf

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "direction", d)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("ray direction must be a unit vector")
        if self.t_min < 0 or not self.t_max > self.t_min:
            raise ValueError("require 0 <= t_min < t_max")

    def at(self, s):
        return self.origin + s * self.direction


class Hit(NamedTuple):
    primitive_id: int
    distance: float
    entering_front_face: bool


@dataclass(frozen=True)
class PeriodicDomain:
    """Laterally periodic box ``[x0, x0+x_extent) x [y0, y0+y_extent)``; z does not wrap."""

    x_extent: float
    y_extent: float
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not (self.x_extent > 0 and self.y_extent > 0):
            raise ValueError("periodic domain extents must be positive")
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))

    @property
    def area(self) -> float:
        return self.x_extent * self.y_extent

    def as_array(self) -> np.ndarray:
        return np.array([self.origin[0], self.origin[1], self.x_extent, self.y_extent])

    def wrap(self, points) -> np.ndarray:
        p = np.array(points, dtype=float)
        p[..., 0] = self.origin[0] + np.mod(p[..., 0] - self.origin[0], self.x_extent)
        p[..., 1] = self.origin[1] + np.mod(p[..., 1] - self.origin[1], self.y_extent)
        return p


def heading_vector(azimuth) -> np.ndarray:
    """Horizontal unit vector pointing along compass heading ``azimuth``."""
    return np.array([np.sin(azimuth), np.cos(azimuth), 0.0])


def yaw_matrix(yaw: float) -> np.ndarray:
    """Rotation that adds ``yaw`` to every compass heading (clockwise seen from above)."""
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def transform(mesh: Mesh, yaw: float = 0.0, translation=(0.0, 0.0, 0.0), anchor=None) -> Mesh:
    """Rotate ``mesh`` by a compass ``yaw`` about the vertical line through
    ``anchor`` (default origin), then translate."""
    anchor = np.zeros(3) if anchor is None else np.asarray(anchor, dtype=float)
    rot = yaw_matrix(yaw)
    verts = (mesh.vertices - anchor) @ rot.T + anchor + np.asarray(translation, dtype=float)
    return Mesh(verts, mesh.plant_id, mesh.organ)


def periodic_images(mesh: Mesh, domain: PeriodicDomain):
    """Lattice shifts of every triangle whose shifted footprint overlaps ``domain``.

    Returns ``(vertices, owner)``: the unshifted triangles that overlap the
    domain come first, followed by the ghost copies reaching into it. A
    triangle lying wholly outside the domain is represented only by its
    overlapping images.
    """
    v = mesh.vertices
    lo = v.min(axis=1)
    hi = v.max(axis=1)
    x0, y0 = domain.origin[0], domain.origin[1]
    X, Y = domain.x_extent, domain.y_extent
    kx_lo = np.floor((x0 - hi[:, 0]) / X).astype(np.int64) + 1
    kx_hi = np.ceil((x0 + X - lo[:, 0]) / X).astype(np.int64) - 1
    ky_lo = np.floor((y0 - hi[:, 1]) / Y).astype(np.int64) + 1
    ky_hi = np.ceil((y0 + Y - lo[:, 1]) / Y).astype(np.int64) - 1
    owner = np.arange(len(mesh), dtype=np.int64)
    parts_v = []
    parts_o = []
    if len(mesh):
        shifts = [(0, 0)] + [(kx, ky) for kx in range(int(kx_lo.min()), int(kx_hi.max()) + 1)
                             for ky in range(int(ky_lo.min()), int(ky_hi.max()) + 1) if (kx, ky) != (0, 0)]
        for kx, ky in shifts:
            sel = (kx_lo <= kx) & (kx <= kx_hi) & (ky_lo <= ky) & (ky <= ky_hi)
            if not sel.any():
                continue
            parts_v.append(v[sel] + np.array([kx * X, ky * Y, 0.0]))
            parts_o.append(owner[sel])
    if not parts_v:
        return np.empty((0, 3, 3)), np.empty(0, dtype=np.int64)
    return np.concatenate(parts_v), np.concatenate(parts_o)
