"""Procedural maize plants and leaf-plane azimuth handling.

A generated plant is a tapered, capped stem with distichous leaves: each
blade is a quad strip laid along a drooping parabolic midrib, its width
running across the midrib's vertical plane, rolled by ``leaf_roll`` about the
midrib. The roll keeps replicated plants at very close spacing from producing
exactly coplanar, overlapping blades.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .geometry import Mesh, Organ, heading_vector, transform

STEM_SIDES = 6
STEM_SEGMENTS = 3
STEM_TOP_TAPER = 0.5
LEAF_ZONE = (0.2, 0.85)
AMBIGUITY_RATIO = 1.05

# Blade width along the normalised midrib, w(u) = W * (1 - u) * (0.4 + 2.4 u) / 0.8166...
# peaks at W near u = 0.42 and reaches zero at the tip.
WIDTH_POLY = np.array([0.4, 2.0, -2.4])
WIDTH_PEAK = (1.0 - 2.0 / 4.8) * (0.4 + 2.4 * 2.0 / 4.8)


class AmbiguousAzimuthError(ValueError):
    """Leaf layout has no dominant horizontal axis."""


@dataclass(frozen=True)
class PlantParams:
    height: float = 2.0
    leaf_count: int = 8
    leaf_length: float = 0.85
    leaf_width: float = 0.06
    phyllotaxy_base_azimuth: float = 0.0
    phyllotaxy_noise_sd: float = 0.1
    leaf_inclination: float = 0.9
    curvature: float = 0.35
    leaf_roll: float = 0.2
    stem_radius: float = 0.012
    segments_per_leaf: int = 10
    seed: int = 0

    def validate(self) -> "PlantParams":
        if not self.height > 0:
            raise ValueError("height must be > 0")
        if self.leaf_count < 0:
            raise ValueError("leaf_count must be >= 0")
        if not 0 <= self.leaf_inclination < np.pi / 2:
            raise ValueError("leaf_inclination must lie in [0, pi/2)")
        if self.segments_per_leaf < 2:
            raise ValueError("segments_per_leaf must be >= 2")
        if self.leaf_count and not (self.leaf_length > 0 and self.leaf_width > 0):
            raise ValueError("leaf_length and leaf_width must be > 0")
        if not self.stem_radius > 0:
            raise ValueError("stem_radius must be > 0")
        if self.phyllotaxy_noise_sd < 0 or self.curvature < 0:
            raise ValueError("noise and curvature must be >= 0")
        if not abs(self.leaf_roll) < np.pi / 2:
            raise ValueError("leaf_roll must lie in (-pi/2, pi/2)")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PlantModel:
    mesh: Mesh
    base_anchor: np.ndarray
    leaf_plane_azimuth: Optional[float]
    total_leaf_area: float


def blade_width(u, width):
    return width * np.polynomial.polynomial.polyval(np.asarray(u, dtype=float), WIDTH_POLY) / WIDTH_PEAK


def _midrib(length, inclination, curvature, n_seg):
    """Points at equal arc-length steps along ``(s cos i, s sin i - k s^2 / L)``."""
    s = np.linspace(0.0, 4.0 * length, 8001)
    x = s * np.cos(inclination)
    z = s * np.sin(inclination) - curvature * s ** 2 / length
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(x), np.diff(z)))])
    targets = np.linspace(0.0, length, n_seg + 1)
    st = np.interp(targets, arc, s)
    return st * np.cos(inclination), st * np.sin(inclination) - curvature * st ** 2 / length


def _leaf(base, azimuth, p: PlantParams):
    n = p.segments_per_leaf
    u = np.linspace(0.0, 1.0, n + 1)
    horiz, up = _midrib(p.leaf_length, p.leaf_inclination, p.curvature, n)
    h = heading_vector(azimuth)
    across = np.array([h[1], -h[0], 0.0])
    spine = base + np.outer(horiz, h) + np.outer(up, [0.0, 0.0, 1.0])
    # roll the cross-section about the midrib tangent; keeps it perpendicular
    # to the midrib, so blade width (and area) is unchanged
    tangent = np.gradient(spine, axis=0)
    tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
    lift = np.cross(tangent, across)
    side = np.cos(p.leaf_roll) * across + np.sin(p.leaf_roll) * lift
    half = 0.5 * blade_width(u, p.leaf_width)
    a = spine + half[:, None] * side
    b = spine - half[:, None] * side
    tris = []
    for k in range(n - 1):
        tris.append((a[k], b[k], b[k + 1]))
        tris.append((a[k], b[k + 1], a[k + 1]))
    tris.append((a[n - 1], b[n - 1], spine[n]))
    return np.array(tris)


def _stem(p: PlantParams):
    z = np.linspace(0.0, p.height, STEM_SEGMENTS + 1)
    r = p.stem_radius * (1.0 - (1.0 - STEM_TOP_TAPER) * z / p.height)
    ang = 2 * np.pi * np.arange(STEM_SIDES) / STEM_SIDES
    ring = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    pts = np.concatenate([r[:, None, None] * ring[None], np.broadcast_to(z[:, None, None], (len(z), STEM_SIDES, 1))], axis=2)
    tris = []
    for k in range(STEM_SEGMENTS):
        for j in range(STEM_SIDES):
            j2 = (j + 1) % STEM_SIDES
            tris.append((pts[k, j], pts[k, j2], pts[k + 1, j2]))
            tris.append((pts[k, j], pts[k + 1, j2], pts[k + 1, j]))
    bottom = np.zeros(3)
    top = np.array([0.0, 0.0, p.height])
    for j in range(STEM_SIDES):
        j2 = (j + 1) % STEM_SIDES
        tris.append((bottom, pts[0, j2], pts[0, j]))
        tris.append((top, pts[-1, j], pts[-1, j2]))
    return np.array(tris)


def generate_maize(params: PlantParams) -> PlantModel:
    """Build a deterministic procedural maize plant from ``params``."""
    p = params.validate()
    rng = np.random.default_rng(p.seed)
    noise = rng.normal(0.0, p.phyllotaxy_noise_sd, size=p.leaf_count) if p.leaf_count else np.zeros(0)
    stem = _stem(p)
    parts = [stem]
    organs = [np.full(len(stem), Organ.STEM, dtype=np.int8)]
    if p.leaf_count == 1:
        heights = np.array([0.5 * sum(LEAF_ZONE)]) * p.height
    else:
        heights = np.linspace(*LEAF_ZONE, p.leaf_count) * p.height
    for i in range(p.leaf_count):
        az = p.phyllotaxy_base_azimuth + np.pi * (i % 2) + noise[i]
        r = p.stem_radius * (1.0 - (1.0 - STEM_TOP_TAPER) * heights[i] / p.height)
        base = heading_vector(az) * r + np.array([0.0, 0.0, heights[i]])
        leaf = _leaf(base, az, p)
        parts.append(leaf)
        organs.append(np.full(len(leaf), Organ.LEAF, dtype=np.int8))
    mesh = Mesh(np.concatenate(parts), 0, np.concatenate(organs))
    leaf_area = float(mesh.areas[mesh.organ == Organ.LEAF].sum())
    return PlantModel(mesh, np.zeros(3), float(np.mod(p.phyllotaxy_base_azimuth, np.pi)), leaf_area)


def estimate_leaf_plane_azimuth(mesh: Mesh) -> float:
    """Dominant horizontal axis of the leaf area, as a heading in ``[0, pi)``.

    Uses the leading eigenvector of the area-weighted 2x2 scatter matrix of
    leaf-triangle centroids. Raises :class:`AmbiguousAzimuthError` when the
    two eigenvalues are within a factor of 1.05.
    """
    leaf = mesh.organ == Organ.LEAF
    if not leaf.any():
        raise ValueError("mesh has no leaf triangles")
    w = mesh.areas[leaf]
    c = mesh.centroids[leaf][:, :2]
    mean = (w[:, None] * c).sum(axis=0) / w.sum()
    d = c - mean
    scatter = (w[:, None, None] * d[:, :, None] * d[:, None, :]).sum(axis=0)
    evals, evecs = np.linalg.eigh(scatter)
    if evals[1] <= 0 or evals[0] > 0 and evals[1] / evals[0] < AMBIGUITY_RATIO:
        raise AmbiguousAzimuthError(f"leaf scatter is near-isotropic (eigenvalues {evals[0]:.3g}, {evals[1]:.3g})")
    vx, vy = evecs[:, 1]
    return float(np.mod(np.arctan2(vx, vy), np.pi))


def reorient(plant: PlantModel, target_azimuth: float) -> PlantModel:
    """Yaw ``plant`` about its base so its measured leaf axis points along ``target_azimuth``."""
    current = estimate_leaf_plane_azimuth(plant.mesh)
    delta = _axis_delta(current, target_azimuth)
    mesh = transform(plant.mesh, delta, anchor=plant.base_anchor) if delta != 0.0 else plant.mesh.copy()
    return replace(plant, mesh=mesh, leaf_plane_azimuth=float(np.mod(target_azimuth, np.pi)))


def _axis_delta(current, target):
    """Smallest rotation taking axis ``current`` onto axis ``target`` (both mod pi)."""
    return float(np.mod(target - current + np.pi / 2, np.pi) - np.pi / 2)
