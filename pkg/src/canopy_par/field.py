"""Virtual fields: plant replication, orientation modes and the periodic scene.

Scenes are stored in a *field frame*: the world rotated about the vertical so
the row axis points along +x and the cross-row axis along +y. Any row
direction then tiles exactly in an axis-aligned periodic domain; callers rotate
sun directions into this frame with :meth:`SceneField.to_field`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import rng
from .bvh import Bvh, build_bvh
from .geometry import Mesh, Organ, PeriodicDomain, heading_vector, periodic_images, transform, yaw_matrix
from .plantgen import PlantModel, _axis_delta, estimate_leaf_plane_azimuth

INCH = 0.0254
_UNITS = {"inch": INCH, "in": INCH, "cm": 0.01, "m": 1.0}
GROUND_CELL = 0.1


def convert_spacing(value: float, unit: str = "m") -> float:
    """Convert a spacing to metres (1 inch = 0.0254 m exactly)."""
    if unit not in _UNITS:
        raise ValueError(f"unknown unit {unit!r}")
    if not value > 0:
        raise ValueError("spacing must be positive")
    return value * _UNITS[unit]


class Orientation(str, enum.Enum):
    ON_ROW = "on_row"
    OFF_ROW = "off_row"
    RANDOM = "random"


@dataclass(frozen=True)
class OrientationMode:
    kind: Orientation
    seed: int = 0

    @classmethod
    def parse(cls, value) -> "OrientationMode":
        if isinstance(value, OrientationMode):
            return value
        text = str(value).lower().replace("-", "_")
        aliases = {"onrowparallel": "on_row", "on_row_parallel": "on_row",
                   "offrowparallel": "off_row", "off_row_parallel": "off_row"}
        if text.startswith("random"):
            _, _, tail = text.partition(":")
            return cls(Orientation.RANDOM, int(tail) if tail else 0)
        return cls(Orientation(aliases.get(text, text)))

    @property
    def label(self) -> str:
        return self.kind.value if self.kind is not Orientation.RANDOM else f"random:{self.seed}"


ON_ROW = OrientationMode(Orientation.ON_ROW)
OFF_ROW = OrientationMode(Orientation.OFF_ROW)


def RANDOM(seed: int = 0) -> OrientationMode:
    return OrientationMode(Orientation.RANDOM, seed)


@dataclass(frozen=True)
class FieldLayout:
    plant_source: Union[PlantModel, Sequence[PlantModel]]
    rows: int = 3
    plants_per_row: int = 15
    row_spacing: float = 30 * INCH
    plant_spacing: float = 6 * INCH
    row_azimuth: float = 0.0
    orientation: OrientationMode = OFF_ROW
    ground_cell: float = GROUND_CELL

    def validate(self) -> "FieldLayout":
        if self.rows < 1 or self.plants_per_row < 1:
            raise ValueError("rows and plants_per_row must be >= 1")
        if not (self.row_spacing > 0 and self.plant_spacing > 0):
            raise ValueError("spacings must be positive")
        if not isinstance(self.plant_source, PlantModel):
            if len(self.plant_source) != self.rows * self.plants_per_row:
                raise ValueError("per-position plant list must have rows * plants_per_row entries")
        return self

    @property
    def density(self) -> float:
        """Plants per square metre."""
        return 1.0 / (self.row_spacing * self.plant_spacing)


@dataclass(frozen=True)
class SceneField:
    """Immutable scene: real primitives, the BVH (with periodic ghosts) and bookkeeping."""

    mesh: Mesh
    bvh: Bvh
    domain: Optional[PeriodicDomain]
    ground_area: float
    plant_positions: List[Tuple[int, np.ndarray]] = field(default_factory=list)
    layout: Optional[FieldLayout] = None
    frame_yaw: float = 0.0

    @classmethod
    def from_mesh(cls, mesh: Mesh, domain: Optional[PeriodicDomain] = None, ground: bool = True,
                  ground_cell: float = GROUND_CELL, ground_extent=None, **extra) -> "SceneField":
        """Wrap an arbitrary mesh (already in field coordinates) as a scene.

        With ``ground=True`` a tiled ground plane at z = 0 covers the periodic
        domain, or ``ground_extent = (x0, y0, x1, y1)`` when not periodic.
        """
        if ground:
            if domain is not None:
                x0, y0 = domain.origin[:2]
                x1, y1 = x0 + domain.x_extent, y0 + domain.y_extent
            elif ground_extent is not None:
                x0, y0, x1, y1 = ground_extent
            else:
                lo, hi = mesh.bbox
                x0, y0, x1, y1 = lo[0], lo[1], hi[0], hi[1]
            mesh = Mesh.concat([mesh, ground_tiles(x0, y0, x1, y1, ground_cell)])
        if domain is not None:
            verts, owner = periodic_images(mesh, domain)
            bvh = build_bvh(verts, owner)
            area = domain.area
        else:
            bvh = build_bvh(mesh)
            if ground and len(mesh):
                area = float(mesh.areas[mesh.organ == Organ.GROUND].sum())
            else:
                lo, hi = mesh.bbox
                area = float((hi[0] - lo[0]) * (hi[1] - lo[1]))
        return cls(mesh, bvh, domain, area, **extra)

    @property
    def plant_ids(self) -> np.ndarray:
        return np.unique(self.mesh.plant_id[self.mesh.organ != Organ.GROUND])

    def to_field(self, vectors) -> np.ndarray:
        """World-frame vectors to field-frame vectors."""
        return np.asarray(vectors, dtype=float) @ yaw_matrix(self.frame_yaw).T

    def to_world(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ yaw_matrix(-self.frame_yaw).T

    def plant_mesh(self, plant_id: int, world: bool = True) -> Mesh:
        m = self.mesh.subset(self.mesh.plant_id == plant_id)
        if not len(m):
            raise KeyError(f"unknown plant id {plant_id}")
        return transform(m, -self.frame_yaw) if world else m

    @property
    def canopy_top(self) -> float:
        sel = self.mesh.organ != Organ.GROUND
        return float(self.mesh.vertices[sel][..., 2].max()) if sel.any() else 0.0

    def world_mesh(self) -> Mesh:
        return transform(self.mesh, -self.frame_yaw)


def ground_tiles(x0, y0, x1, y1, cell=GROUND_CELL) -> Mesh:
    nx = max(1, int(np.ceil((x1 - x0) / cell - 1e-9)))
    ny = max(1, int(np.ceil((y1 - y0) / cell - 1e-9)))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X0, Y0 = np.meshgrid(xs[:-1], ys[:-1], indexing="ij")
    X1, Y1 = np.meshgrid(xs[1:], ys[1:], indexing="ij")
    X0, Y0, X1, Y1 = (a.ravel() for a in (X0, Y0, X1, Y1))
    z = np.zeros_like(X0)
    a = np.stack([X0, Y0, z], axis=1)
    b = np.stack([X1, Y0, z], axis=1)
    c = np.stack([X1, Y1, z], axis=1)
    d = np.stack([X0, Y1, z], axis=1)
    tris = np.concatenate([np.stack([a, b, c], axis=1), np.stack([a, c, d], axis=1)])
    return Mesh(tris, -1, Organ.GROUND)


def _target_axis(mode: OrientationMode, row_azimuth: float, row: int, col: int) -> float:
    if mode.kind is Orientation.ON_ROW:
        return row_azimuth
    if mode.kind is Orientation.OFF_ROW:
        return row_azimuth + np.pi / 2
    return row_azimuth + np.pi * rng.uniform(rng.seed_to_int(mode.seed), 0x0F1E1D, row, col, 0)


def build_field(layout: FieldLayout) -> SceneField:
    """Replicate plants on the row grid, orient them and build the periodic scene."""
    lay = layout.validate()
    frame_yaw = np.pi / 2 - lay.row_azimuth
    sources = [lay.plant_source] if isinstance(lay.plant_source, PlantModel) else list(lay.plant_source)
    measured = {id(p): estimate_leaf_plane_azimuth(p.mesh) for p in sources}
    u_row = heading_vector(lay.row_azimuth)
    u_cross = np.array([-np.cos(lay.row_azimuth), np.sin(lay.row_azimuth), 0.0])
    parts = []
    positions = []
    for j in range(lay.rows):
        for i in range(lay.plants_per_row):
            pid = j * lay.plants_per_row + i
            plant = sources[0] if len(sources) == 1 else sources[pid]
            target = _target_axis(lay.orientation, lay.row_azimuth, j, i)
            yaw = _axis_delta(measured[id(plant)], target) + frame_yaw
            local = np.array([i * lay.plant_spacing, j * lay.row_spacing, 0.0])
            m = transform(plant.mesh, yaw, local - plant.base_anchor, anchor=plant.base_anchor)
            m.plant_id[:] = pid
            parts.append(m)
            positions.append((pid, i * lay.plant_spacing * u_row + j * lay.row_spacing * u_cross))
    domain = PeriodicDomain(
        lay.plants_per_row * lay.plant_spacing,
        lay.rows * lay.row_spacing,
        np.array([-lay.plant_spacing / 2, -lay.row_spacing / 2, 0.0]),
    )
    return SceneField.from_mesh(Mesh.concat(parts), domain, ground=True, ground_cell=lay.ground_cell,
                                plant_positions=positions, layout=lay, frame_yaw=frame_yaw)
