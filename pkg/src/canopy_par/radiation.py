"""Reverse ray-traced PAR on canopy primitives.

First pass (direct + diffuse) traces from sample points on each primitive
back toward the sun or the sky. Leaves are opaque in this pass; their
reflected and transmitted share is redistributed by the scattering passes,
which shoot each face's unabsorbed power as Lambertian rays and deposit it on
whatever they hit. Absorbed flux is ``incident * (1 - rho - tau)``.

Fluxes are umol m-2 s-1 of one-sided area summed over both faces; powers are
umol s-1. Per-face arrays use index 0 for the side the normal points to.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numba
import numpy as np
from numba import prange

from .bvh import escape_wraps, trace_one
from .field import SceneField
from .geometry import Organ, SURFACE_EPSILON
from .rng import seed_to_int, uniform
from .solar import SolarState

_jit = dict(cache=True, error_model="numpy")

STREAM_DIRECT = 1
STREAM_DIFFUSE = 2
STREAM_SENSOR = 3
STREAM_SCATTER = 100


@dataclass(frozen=True)
class RadiationConfig:
    """Optical properties, sample budgets and wrapping for the transfer solver.

    ``max_wraps`` is the minimum number of periodic re-entries per ray; with
    ``adaptive_wraps`` each ray may wrap as often as it needs to climb out of
    (or fall below) the scene, so oblique rays in narrow domains are not
    mistaken for open sky. ``max_wraps = 0`` disables periodic wrapping.
    """

    leaf_reflectance: float = 0.1
    leaf_transmittance: float = 0.1
    ground_reflectance: float = 0.0
    stem_reflectance: Optional[float] = None
    stem_transmittance: Optional[float] = None
    scattering_iterations: int = 5
    direct_samples_per_primitive: int = 16
    diffuse_samples_per_primitive: int = 64
    scatter_samples_per_primitive: int = 32
    max_wraps: int = 4
    adaptive_wraps: bool = True
    rng_seed: int = 0

    def validate(self) -> "RadiationConfig":
        pairs = [(self.leaf_reflectance, self.leaf_transmittance),
                 (self.stem_reflectance if self.stem_reflectance is not None else self.leaf_reflectance,
                  self.stem_transmittance if self.stem_transmittance is not None else self.leaf_transmittance),
                 (self.ground_reflectance, 0.0)]
        for r, t in pairs:
            if r < 0 or t < 0 or r + t >= 1:
                raise ValueError(f"optical properties need rho >= 0, tau >= 0 and rho + tau < 1 (got {r}, {t})")
        if self.scattering_iterations < 0:
            raise ValueError("scattering_iterations must be >= 0")
        if min(self.direct_samples_per_primitive, self.diffuse_samples_per_primitive,
               self.scatter_samples_per_primitive) < 1:
            raise ValueError("sample counts must be >= 1")
        if self.max_wraps < 0:
            raise ValueError("max_wraps must be >= 0")
        return self

    def optical(self, organ: np.ndarray):
        """Per-primitive ``(rho, tau)`` arrays for organ labels."""
        rho = np.full(len(organ), self.leaf_reflectance)
        tau = np.full(len(organ), self.leaf_transmittance)
        stem = organ == Organ.STEM
        if self.stem_reflectance is not None:
            rho[stem] = self.stem_reflectance
        if self.stem_transmittance is not None:
            tau[stem] = self.stem_transmittance
        ground = organ == Organ.GROUND
        rho[ground] = self.ground_reflectance
        tau[ground] = 0.0
        return rho, tau


@dataclass
class FluxMap:
    """Per-primitive face fluxes plus the bookkeeping needed for energy audits."""

    direct_face: np.ndarray
    diffuse_face: np.ndarray
    scattered_face: np.ndarray
    exitance_face: np.ndarray
    rho: np.ndarray
    tau: np.ndarray
    incident_power: float = 0.0
    escaped_power: float = 0.0
    residual_power: float = 0.0
    plant_power: Dict[int, float] = field(default_factory=dict)

    @classmethod
    def zeros(cls, scene: SceneField, cfg: RadiationConfig) -> "FluxMap":
        n = len(scene.mesh)
        rho, tau = cfg.optical(scene.mesh.organ)
        z = lambda: np.zeros((n, 2))
        fm = cls(z(), z(), z(), z(), rho, tau)
        fm.plant_power = {int(p): 0.0 for p in scene.plant_ids}
        return fm

    @property
    def incident_direct(self):
        return self.direct_face.sum(axis=1)

    @property
    def incident_diffuse(self):
        return self.diffuse_face.sum(axis=1)

    @property
    def incident_scattered(self):
        return self.scattered_face.sum(axis=1)

    @property
    def incident_total(self):
        return self.incident_direct + self.incident_diffuse + self.incident_scattered

    @property
    def absorbed(self):
        return self.incident_total * (1.0 - self.rho - self.tau)

    def combined(self, other: "FluxMap") -> "FluxMap":
        """Sum of two first-pass partial maps (direct from one, diffuse from the other)."""
        return replace(
            self,
            direct_face=self.direct_face + other.direct_face,
            diffuse_face=self.diffuse_face + other.diffuse_face,
            scattered_face=self.scattered_face + other.scattered_face,
            incident_power=self.incident_power + other.incident_power,
        )


# -- sampling helpers ---------------------------------------------------------------------

@numba.njit(inline="always", **_jit)
def _grid_cell(k, n):
    nx = int(math.sqrt(n))
    ny = n // nx
    if k < nx * ny:
        return k // ny, k % ny, nx, ny
    return 0, 0, 1, 1


@numba.njit(**_jit)
def _stratified_pair(seed, stream, p, k, n, dim0):
    i, j, nx, ny = _grid_cell(k, n)
    u1 = (i + uniform(seed, stream, p, k, dim0)) / nx
    u2 = (j + uniform(seed, stream, p, k, dim0 + 1)) / ny
    return u1, u2


@numba.njit(inline="always", **_jit)
def _point_on_triangle(v0, e1, e2, p, u1, u2):
    su = math.sqrt(u1)
    b1 = su * (1.0 - u2)
    b2 = su * u2
    return (v0[p, 0] + b1 * e1[p, 0] + b2 * e2[p, 0],
            v0[p, 1] + b1 * e1[p, 1] + b2 * e2[p, 1],
            v0[p, 2] + b1 * e1[p, 2] + b2 * e2[p, 2])


@numba.njit(inline="always", **_jit)
def _cosine_dir(nx, ny, nz, u1, u2):
    r = math.sqrt(u1)
    phi = 2.0 * math.pi * u2
    lx = r * math.cos(phi)
    ly = r * math.sin(phi)
    lz = math.sqrt(max(0.0, 1.0 - u1))
    sign = 1.0 if nz >= 0.0 else -1.0
    a = -1.0 / (sign + nz)
    b = nx * ny * a
    tx, ty, tz = 1.0 + sign * nx * nx * a, sign * b, -sign * nx
    bx, by, bz = b, sign + ny * ny * a, -ny
    return (lx * tx + ly * bx + lz * nx,
            lx * ty + ly * by + lz * ny,
            lx * tz + ly * bz + lz * nz)


# -- kernels -----------------------------------------------------------------------------------

@numba.njit(inline="always", **_jit)
def _cast(px, py, pz, dx, dy, dz, B, dom, wraps):
    # negative ``wraps`` requests the adaptive escape budget with floor -wraps
    if wraps < 0:
        wraps = escape_wraps(pz, dx, dy, dz, np.inf, B, dom, -wraps)
    return trace_one(px, py, pz, dx, dy, dz, 0.0, np.inf, B, dom, wraps)


@numba.njit(parallel=True, **_jit)
def _direct_kernel(v0, e1, e2, nrm, active, nsamp, sun, B, dom, max_wraps, seed, out):
    sx, sy, sz = sun[0], sun[1], sun[2]
    for p in prange(v0.shape[0]):
        if not active[p]:
            continue
        c = nrm[p, 0] * sx + nrm[p, 1] * sy + nrm[p, 2] * sz
        if c == 0.0:
            continue
        sg = 1.0 if c > 0.0 else -1.0
        hits = 0
        for k in range(nsamp):
            u1, u2 = _stratified_pair(seed, STREAM_DIRECT, p, k, nsamp, 0)
            px, py, pz = _point_on_triangle(v0, e1, e2, p, u1, u2)
            px += sg * SURFACE_EPSILON * nrm[p, 0]
            py += sg * SURFACE_EPSILON * nrm[p, 1]
            pz += sg * SURFACE_EPSILON * nrm[p, 2]
            slot, t = _cast(px, py, pz, sx, sy, sz, B, dom, max_wraps)
            if slot < 0:
                hits += 1
        out[p] = hits


@numba.njit(parallel=True, **_jit)
def _diffuse_kernel(v0, e1, e2, nrm, two_sided, nsamp, B, dom, max_wraps, seed, esc, cnt):
    for p in prange(v0.shape[0]):
        nfaces = 2 if two_sided[p] else 1
        for f in range(nfaces):
            nf = (nsamp + 1 - f) // 2 if nfaces == 2 else nsamp
            if nf == 0:
                continue
            sg = 1.0 if f == 0 else -1.0
            nx, ny, nz = sg * nrm[p, 0], sg * nrm[p, 1], sg * nrm[p, 2]
            off = int(uniform(seed, STREAM_DIFFUSE, p, f, 7) * nf)
            n_up = 0
            for k in range(nf):
                key = 2 * k + f
                u1 = uniform(seed, STREAM_DIFFUSE, p, key, 0)
                u2 = uniform(seed, STREAM_DIFFUSE, p, key, 1)
                px, py, pz = _point_on_triangle(v0, e1, e2, p, u1, u2)
                d1, d2 = _stratified_pair(seed, STREAM_DIFFUSE, p, (k + off) % nf, nf, 2 + 4 * f)
                dx, dy, dz = _cosine_dir(nx, ny, nz, d1, d2)
                slot, t = _cast(px + SURFACE_EPSILON * nx, py + SURFACE_EPSILON * ny, pz + SURFACE_EPSILON * nz,
                                dx, dy, dz, B, dom, max_wraps)
                if slot < 0 and dz > 0.0:
                    n_up += 1
            esc[p, f] = n_up
            cnt[p, f] = nf


@numba.njit(parallel=True, **_jit)
def _scatter_kernel(v0, e1, e2, nrm, power, nsamp, B, dom, max_wraps, seed, stream, out_hit, out_face, out_w, out_up):
    be1 = B[8]
    be2 = B[9]
    owner = B[10]
    for p in prange(v0.shape[0]):
        p0 = power[p, 0]
        p1 = power[p, 1]
        base = p * nsamp
        for k in range(nsamp):
            out_hit[base + k] = -1
            out_w[base + k] = 0.0
            out_face[base + k] = 0
            out_up[base + k] = False
        if p0 <= 0.0 and p1 <= 0.0:
            continue
        # with a single sample the ray carries both faces' power from the brighter face
        both = p0 > 0.0 and p1 > 0.0 and nsamp > 1
        for k in range(nsamp):
            if both:
                f = k % 2
                nf = (nsamp + 1 - f) // 2
                kf = k // 2
                w = (p0 if f == 0 else p1) / nf
            else:
                f = 0 if p0 >= p1 else 1
                nf = nsamp
                kf = k
                w = (p0 + p1) / nf
            sg = 1.0 if f == 0 else -1.0
            nx, ny, nz = sg * nrm[p, 0], sg * nrm[p, 1], sg * nrm[p, 2]
            u1 = uniform(seed, stream, p, k, 0)
            u2 = uniform(seed, stream, p, k, 1)
            px, py, pz = _point_on_triangle(v0, e1, e2, p, u1, u2)
            off = int(uniform(seed, stream, p, f, 7) * nf)
            d1, d2 = _stratified_pair(seed, stream, p, (kf + off) % nf, nf, 2 + 4 * f)
            dx, dy, dz = _cosine_dir(nx, ny, nz, d1, d2)
            slot, t = _cast(px + SURFACE_EPSILON * nx, py + SURFACE_EPSILON * ny, pz + SURFACE_EPSILON * nz,
                            dx, dy, dz, B, dom, max_wraps)
            out_w[base + k] = w
            if slot >= 0:
                # e1 x e2 of the hit slot: dot < 0 means the ray arrives on the normal side
                hx = be1[slot, 1] * be2[slot, 2] - be1[slot, 2] * be2[slot, 1]
                hy = be1[slot, 2] * be2[slot, 0] - be1[slot, 0] * be2[slot, 2]
                hz = be1[slot, 0] * be2[slot, 1] - be1[slot, 1] * be2[slot, 0]
                out_hit[base + k] = owner[slot]
                out_face[base + k] = 0 if hx * dx + hy * dy + hz * dz < 0.0 else 1
            else:
                out_up[base + k] = dz > 0.0


@numba.njit(parallel=True, **_jit)
def _sensor_kernel(points, sun, nsamp, exitance, B, dom, max_wraps, seed, out_sun, out_sky, out_scat):
    be1 = B[8]
    be2 = B[9]
    owner = B[10]
    for i in prange(points.shape[0]):
        px = points[i, 0]
        py = points[i, 1]
        pz = points[i, 2]
        slot, t = _cast(px, py, pz, sun[0], sun[1], sun[2], B, dom, max_wraps)
        out_sun[i] = 1.0 if slot < 0 else 0.0
        n_up = 0
        scat = 0.0
        for k in range(nsamp):
            d1, d2 = _stratified_pair(seed, STREAM_SENSOR, i, k, nsamp, 0)
            dx, dy, dz = _cosine_dir(0.0, 0.0, 1.0, d1, d2)
            slot, t = _cast(px, py, pz, dx, dy, dz, B, dom, max_wraps)
            if slot < 0:
                if dz > 0.0:
                    n_up += 1
            else:
                hx = be1[slot, 1] * be2[slot, 2] - be1[slot, 2] * be2[slot, 1]
                hy = be1[slot, 2] * be2[slot, 0] - be1[slot, 0] * be2[slot, 2]
                hz = be1[slot, 0] * be2[slot, 1] - be1[slot, 1] * be2[slot, 0]
                f = 0 if hx * dx + hy * dy + hz * dz < 0.0 else 1
                scat += exitance[owner[slot], f]
        out_sky[i] = n_up / nsamp
        out_scat[i] = scat / nsamp


# -- passes ----------------------------------------------------------------------------------------

def _prim_arrays(scene: SceneField):
    v = scene.mesh.vertices
    v0 = np.ascontiguousarray(v[:, 0])
    e1 = np.ascontiguousarray(v[:, 1] - v[:, 0])
    e2 = np.ascontiguousarray(v[:, 2] - v[:, 0])
    return v0, e1, e2, np.ascontiguousarray(scene.mesh.normals)


def _trace_args(scene: SceneField, cfg: RadiationConfig):
    dom = scene.domain.as_array() if scene.domain is not None else np.zeros(4)
    wraps = cfg.max_wraps if scene.domain is not None else 0
    if wraps > 0 and cfg.adaptive_wraps:
        wraps = -wraps
    return scene.bvh.arrays, dom, wraps


def _sun_field(scene: SceneField, sun: SolarState) -> np.ndarray:
    return np.ascontiguousarray(scene.to_field(sun.direction))


def compute_direct(scene: SceneField, sun: SolarState, cfg: RadiationConfig = RadiationConfig()) -> FluxMap:
    """Direct-beam incident flux on every primitive via shadow rays toward the sun."""
    cfg.validate()
    if not sun.sun_up:
        raise ValueError("compute_direct called with the sun below the horizon")
    fm = FluxMap.zeros(scene, cfg)
    v0, e1, e2, nrm = _prim_arrays(scene)
    s = _sun_field(scene, sun)
    B, dom, wraps = _trace_args(scene, cfg)
    n = cfg.direct_samples_per_primitive
    unocc = np.zeros(len(v0), dtype=np.int64)
    _direct_kernel(v0, e1, e2, nrm, np.ones(len(v0), dtype=np.bool_), n, s, B, dom, wraps,
                   seed_to_int(cfg.rng_seed), unocc)
    cos_inc = nrm @ s
    flux = sun.direct_normal_par * np.abs(cos_inc) * unocc / n
    face = np.where(cos_inc >= 0, 0, 1)
    fm.direct_face[np.arange(len(v0)), face] = flux
    fm.incident_power = sun.direct_normal_par * max(s[2], 0.0) * scene.ground_area
    return fm


def compute_diffuse(scene: SceneField, sun: SolarState, cfg: RadiationConfig = RadiationConfig()) -> FluxMap:
    """Isotropic-sky diffuse flux from cosine-weighted hemisphere rays on each face."""
    cfg.validate()
    fm = FluxMap.zeros(scene, cfg)
    sky = sun.diffuse_horizontal_par
    if sky < 0:
        raise ValueError("diffuse_horizontal_par must be >= 0")
    if sky == 0:
        return fm
    v0, e1, e2, nrm = _prim_arrays(scene)
    B, dom, wraps = _trace_args(scene, cfg)
    two_sided = scene.mesh.organ != Organ.GROUND
    esc = np.zeros((len(v0), 2), dtype=np.int64)
    cnt = np.zeros((len(v0), 2), dtype=np.int64)
    _diffuse_kernel(v0, e1, e2, nrm, two_sided, cfg.diffuse_samples_per_primitive, B, dom, wraps,
                    seed_to_int(cfg.rng_seed), esc, cnt)
    fm.diffuse_face = sky * esc / np.maximum(cnt, 1)
    fm.incident_power = sky * scene.ground_area
    return fm


def run_scattering(scene: SceneField, first_pass: FluxMap, cfg: RadiationConfig = RadiationConfig()) -> FluxMap:
    """Redistribute reflected and transmitted power for ``scattering_iterations`` bounces."""
    cfg.validate()
    fm = replace(first_pass, scattered_face=np.zeros_like(first_pass.direct_face),
                 exitance_face=np.zeros_like(first_pass.direct_face))
    rho, tau = fm.rho, fm.tau
    area = scene.mesh.areas
    n = len(area)
    incident = fm.direct_face + fm.diffuse_face
    escaped = 0.0
    if cfg.scattering_iterations and np.any(rho + tau > 0):
        v0, e1, e2, nrm = _prim_arrays(scene)
        B, dom, wraps = _trace_args(scene, cfg)
        ns = cfg.scatter_samples_per_primitive
        seed = seed_to_int(cfg.rng_seed)
        hit = np.empty(n * ns, dtype=np.int64)
        face = np.empty(n * ns, dtype=np.int64)
        w = np.empty(n * ns)
        up = np.empty(n * ns, dtype=np.bool_)
        for it in range(cfg.scattering_iterations):
            m = np.empty((n, 2))
            m[:, 0] = rho * incident[:, 0] + tau * incident[:, 1]
            m[:, 1] = rho * incident[:, 1] + tau * incident[:, 0]
            fm.exitance_face += m
            power = m * area[:, None]
            _scatter_kernel(v0, e1, e2, nrm, power, ns, B, dom, wraps, seed, STREAM_SCATTER + it,
                            hit, face, w, up)
            ok = hit >= 0
            dep = np.bincount(hit[ok] * 2 + face[ok], weights=w[ok], minlength=2 * n).reshape(n, 2)
            escaped += float(w[~ok].sum())
            incident = dep / area[:, None]
            fm.scattered_face += incident
    fm.escaped_power = escaped
    fm.residual_power = float(((rho + tau) * incident.sum(axis=1) * area).sum())
    fm.plant_power = _plant_power(scene, fm)
    return fm


def _plant_power(scene: SceneField, fm: FluxMap) -> Dict[int, float]:
    pw = fm.absorbed * scene.mesh.areas
    canopy = scene.mesh.organ != Organ.GROUND
    ids = scene.mesh.plant_id[canopy]
    uniq, inv = np.unique(ids, return_inverse=True)
    sums = np.bincount(inv, weights=pw[canopy], minlength=len(uniq))
    return {int(u): float(s) for u, s in zip(uniq, sums)}


def compute_flux(scene: SceneField, sun: SolarState, cfg: RadiationConfig = RadiationConfig()) -> FluxMap:
    """Direct + diffuse first pass followed by scattering; all zeros at night."""
    if not sun.sun_up:
        return run_scattering(scene, FluxMap.zeros(scene, cfg), replace(cfg, scattering_iterations=0))
    first = compute_direct(scene, sun, cfg).combined(compute_diffuse(scene, sun, cfg))
    return run_scattering(scene, first, cfg)


@dataclass(frozen=True)
class PlantInterception:
    power: Dict[int, float]
    per_ground_area: float

    def __getitem__(self, plant_id: int) -> float:
        try:
            return self.power[plant_id]
        except KeyError:
            raise KeyError(f"unknown plant id {plant_id}") from None


def per_plant_interception(flux: FluxMap, scene: SceneField) -> PlantInterception:
    """Absorbed power per plant (umol s-1) and canopy total per unit ground area."""
    power = dict(flux.plant_power) if flux.plant_power else _plant_power(scene, flux)
    return PlantInterception(power, float(sum(power.values())) / scene.ground_area)


def energy_budget(flux: FluxMap, scene: SceneField) -> Dict[str, float]:
    pw = flux.absorbed * scene.mesh.areas
    ground = scene.mesh.organ == Organ.GROUND
    return {
        "incident": flux.incident_power,
        "canopy": float(pw[~ground].sum()),
        "ground": float(pw[ground].sum()),
        "escaped": flux.escaped_power,
        "residual": flux.residual_power,
    }


# -- virtual sensors ---------------------------------------------------------------------------

class SensorKind(str, enum.Enum):
    POINT_ABOVE = "point_above"
    LINE_GROUND = "line_ground"


@dataclass(frozen=True)
class SensorSpec:
    """A virtual quantum sensor with an upward-facing horizontal receiver.

    Positions are in field-frame coordinates (x along the row, y across it).
    """

    kind: SensorKind
    points: np.ndarray
    sensor_id: str = ""

    @classmethod
    def point_above(cls, position, sensor_id="above") -> "SensorSpec":
        return cls(SensorKind.POINT_ABOVE, np.asarray(position, dtype=float).reshape(1, 3), sensor_id)

    @classmethod
    def line_ground(cls, start, end, n_samples: int = 50, height: float = 0.05, sensor_id="line") -> "SensorSpec":
        start = np.array(start, dtype=float)[:2]
        end = np.array(end, dtype=float)[:2]
        s = np.linspace(0.0, 1.0, n_samples)
        xy = start + s[:, None] * (end - start)
        pts = np.column_stack([xy, np.full(n_samples, height)])
        return cls(SensorKind.LINE_GROUND, pts, sensor_id)


@dataclass(frozen=True)
class SensorReading:
    par_flux: Dict[str, float]
    fraction_intercepted: Optional[float]
    raw_fraction: Optional[float] = None


def default_sensors(scene: SceneField, above_offset: float = 0.5, line_length: float = 1.0) -> List[SensorSpec]:
    """Two above-canopy points and a ground line sensor midway between the first two rows."""
    top = scene.canopy_top + above_offset
    if scene.domain is not None:
        x0, y0 = scene.domain.origin[:2]
        X, Y = scene.domain.x_extent, scene.domain.y_extent
    else:
        lo, hi = scene.mesh.bbox
        x0, y0, X, Y = lo[0], lo[1], hi[0] - lo[0], hi[1] - lo[1]
    rs = scene.layout.row_spacing if scene.layout is not None else Y / 2
    ps = scene.layout.plant_spacing if scene.layout is not None else 0.0
    y_line = min(rs / 2, y0 + Y)
    x_start = x0 + ps / 2
    length = min(line_length, X)
    return [
        SensorSpec.point_above([x0 + 0.25 * X, y0 + 0.5 * Y, top], "above_1"),
        SensorSpec.point_above([x0 + 0.75 * X, y0 + 0.5 * Y, top], "above_2"),
        SensorSpec.line_ground([x_start, y_line], [x_start + length, y_line], sensor_id="ground_line"),
    ]


def read_sensors(scene: SceneField, sun: SolarState, flux: FluxMap, sensors: Sequence[SensorSpec],
                 cfg: RadiationConfig = RadiationConfig()) -> SensorReading:
    """Flux on each virtual sensor and the above-minus-ground intercepted fraction."""
    top = scene.canopy_top
    for s in sensors:
        if s.kind is SensorKind.POINT_ABOVE and np.any(s.points[:, 2] <= top):
            raise ValueError(f"sensor {s.sensor_id!r} is not above the canopy top ({top:.3f} m)")
    pts = np.ascontiguousarray(np.concatenate([s.points for s in sensors]))
    B, dom, wraps = _trace_args(scene, cfg)
    n = len(pts)
    sun_vis = np.zeros(n)
    sky = np.zeros(n)
    scat = np.zeros(n)
    if sun.sun_up or flux.exitance_face.any():
        s = _sun_field(scene, sun) if sun.sun_up else np.array([0.0, 0.0, 1.0])
        _sensor_kernel(pts, s, cfg.diffuse_samples_per_primitive, np.ascontiguousarray(flux.exitance_face),
                       B, dom, wraps, seed_to_int(cfg.rng_seed), sun_vis, sky, scat)
    direct = sun.direct_normal_par * max(math.cos(sun.zenith), 0.0) if sun.sun_up else 0.0
    values = direct * sun_vis + sun.diffuse_horizontal_par * sky + scat
    readings = {}
    pos = 0
    for s in sensors:
        k = len(s.points)
        readings[s.sensor_id] = float(values[pos:pos + k].mean())
        pos += k
    above = [readings[s.sensor_id] for s in sensors if s.kind is SensorKind.POINT_ABOVE]
    ground = [readings[s.sensor_id] for s in sensors if s.kind is SensorKind.LINE_GROUND]
    fraction = raw = None
    if above and ground:
        a = float(np.mean(above))
        if a > 0:
            raw = (a - float(np.mean(ground))) / a
            fraction = min(1.0, max(0.0, raw))
    return SensorReading(readings, fraction, raw)
