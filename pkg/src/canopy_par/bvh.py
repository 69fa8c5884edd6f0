"""Bounding volume hierarchy and ray casting with lateral periodic wrapping.

The tree is a flat node array built with binned SAH splits. All hot loops are
numba kernels; the ``bvh.arrays`` tuple is what those kernels consume, and the
traversal helpers here are reused by the radiation kernels.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
from numba import prange

from .geometry import Hit, Mesh, PeriodicDomain, Ray

LEAF_SIZE = 4
N_BINS = 12
_STACK = 64
_DET_EPS = 1e-18
_TINY_INV = 1e300

_jit = dict(cache=True, error_model="numpy", fastmath=False)


@numba.njit(**_jit)
def _build(tri_lo, tri_hi, cen, leaf_size, n_bins):
    n = cen.shape[0]
    order = np.arange(n)
    cap = 2 * n + 1
    node_lo = np.empty((cap, 3))
    node_hi = np.empty((cap, 3))
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    start = np.zeros(cap, dtype=np.int64)
    count = np.zeros(cap, dtype=np.int64)
    axis_of = np.zeros(cap, dtype=np.int64)
    st_node = np.empty(cap, dtype=np.int64)
    st_s = np.empty(cap, dtype=np.int64)
    st_e = np.empty(cap, dtype=np.int64)
    sp = 0
    st_node[0] = 0
    st_s[0] = 0
    st_e[0] = n
    sp = 1
    n_nodes = 1
    tmp = np.empty(n, dtype=np.int64)
    bin_cnt = np.zeros(n_bins, dtype=np.int64)
    bin_lo = np.empty((n_bins, 3))
    bin_hi = np.empty((n_bins, 3))
    while sp > 0:
        sp -= 1
        ni = st_node[sp]
        s = st_s[sp]
        e = st_e[sp]
        blo = np.full(3, np.inf)
        bhi = np.full(3, -np.inf)
        clo = np.full(3, np.inf)
        chi = np.full(3, -np.inf)
        for k in range(s, e):
            j = order[k]
            for a in range(3):
                blo[a] = min(blo[a], tri_lo[j, a])
                bhi[a] = max(bhi[a], tri_hi[j, a])
                clo[a] = min(clo[a], cen[j, a])
                chi[a] = max(chi[a], cen[j, a])
        node_lo[ni] = blo
        node_hi[ni] = bhi
        cnt = e - s
        if cnt <= leaf_size:
            start[ni] = s
            count[ni] = cnt
            continue
        axis = 0
        for a in range(1, 3):
            if chi[a] - clo[a] > chi[axis] - clo[axis]:
                axis = a
        extent = chi[axis] - clo[axis]
        mid = -1
        if extent > 0:
            bin_cnt[:] = 0
            bin_lo[:, :] = np.inf
            bin_hi[:, :] = -np.inf
            scale = n_bins / extent
            for k in range(s, e):
                j = order[k]
                b = int((cen[j, axis] - clo[axis]) * scale)
                if b >= n_bins:
                    b = n_bins - 1
                bin_cnt[b] += 1
                for a in range(3):
                    bin_lo[b, a] = min(bin_lo[b, a], tri_lo[j, a])
                    bin_hi[b, a] = max(bin_hi[b, a], tri_hi[j, a])
            best_cost = np.inf
            best_b = -1
            for b in range(n_bins - 1):
                llo = np.full(3, np.inf)
                lhi = np.full(3, -np.inf)
                rlo = np.full(3, np.inf)
                rhi = np.full(3, -np.inf)
                nl = 0
                nr = 0
                for q in range(n_bins):
                    if bin_cnt[q] == 0:
                        continue
                    if q <= b:
                        nl += bin_cnt[q]
                        for a in range(3):
                            llo[a] = min(llo[a], bin_lo[q, a])
                            lhi[a] = max(lhi[a], bin_hi[q, a])
                    else:
                        nr += bin_cnt[q]
                        for a in range(3):
                            rlo[a] = min(rlo[a], bin_lo[q, a])
                            rhi[a] = max(rhi[a], bin_hi[q, a])
                if nl == 0 or nr == 0:
                    continue
                dl = lhi - llo
                dr = rhi - rlo
                al = dl[0] * dl[1] + dl[1] * dl[2] + dl[0] * dl[2]
                ar = dr[0] * dr[1] + dr[1] * dr[2] + dr[0] * dr[2]
                cost = al * nl + ar * nr
                if cost < best_cost:
                    best_cost = cost
                    best_b = b
            if best_b >= 0:
                nl = 0
                w = s
                for k in range(s, e):
                    j = order[k]
                    b = int((cen[j, axis] - clo[axis]) * scale)
                    if b >= n_bins:
                        b = n_bins - 1
                    if b <= best_b:
                        order[w] = j
                        w += 1
                    else:
                        tmp[nl] = j
                        nl += 1
                for k in range(nl):
                    order[w + k] = tmp[k]
                mid = w
        if mid <= s or mid >= e:
            keys = np.empty(cnt)
            for k in range(cnt):
                keys[k] = cen[order[s + k], axis]
            perm = np.argsort(keys, kind="mergesort")
            seg = order[s:e].copy()
            for k in range(cnt):
                order[s + k] = seg[perm[k]]
            mid = s + cnt // 2
        l = n_nodes
        r = n_nodes + 1
        n_nodes += 2
        left[ni] = l
        right[ni] = r
        axis_of[ni] = axis
        st_node[sp] = r
        st_s[sp] = mid
        st_e[sp] = e
        sp += 1
        st_node[sp] = l
        st_s[sp] = s
        st_e[sp] = mid
        sp += 1
    return (node_lo[:n_nodes].copy(), node_hi[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), start[:n_nodes].copy(), count[:n_nodes].copy(),
            axis_of[:n_nodes].copy(), order)


@dataclass(frozen=True)
class Bvh:
    """Immutable tree over triangle *slots*; ``owner[slot]`` is the primitive id reported on a hit."""

    node_lo: np.ndarray
    node_hi: np.ndarray
    node_left: np.ndarray
    node_right: np.ndarray
    node_start: np.ndarray
    node_count: np.ndarray
    node_axis: np.ndarray
    order: np.ndarray
    v0: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    owner: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.node_lo)

    @property
    def arrays(self):
        return (self.node_lo, self.node_hi, self.node_left, self.node_right, self.node_start,
                self.node_count, self.node_axis, self.v0, self.e1, self.e2, self.owner)

    @property
    def z_range(self):
        return float(self.node_lo[0, 2]), float(self.node_hi[0, 2])

    def leaf_primitives(self) -> np.ndarray:
        """Owner ids of every slot reached by scanning the leaves."""
        leaves = np.flatnonzero(self.node_left < 0)
        out = [self.owner[self.node_start[i]:self.node_start[i] + self.node_count[i]] for i in leaves]
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def build_bvh(triangles, owner=None) -> Bvh:
    """Build a BVH over a :class:`Mesh` (or an ``(n, 3, 3)`` vertex array).

    ``owner`` maps each input triangle to the primitive id reported by hits;
    it defaults to the triangle index. Construction is deterministic.
    """
    verts = triangles.vertices if isinstance(triangles, Mesh) else np.asarray(triangles, dtype=float)
    verts = np.ascontiguousarray(verts, dtype=np.float64).reshape(-1, 3, 3)
    if len(verts) == 0:
        raise ValueError("cannot build a BVH over zero triangles")
    owner = np.arange(len(verts), dtype=np.int64) if owner is None else np.asarray(owner, dtype=np.int64)
    lo = verts.min(axis=1)
    hi = verts.max(axis=1)
    cen = verts.mean(axis=1)
    nlo, nhi, left, right, start, count, axis, order = _build(lo, hi, cen, LEAF_SIZE, N_BINS)
    v = verts[order]
    return Bvh(nlo, nhi, left, right, start, count, axis, order,
               np.ascontiguousarray(v[:, 0]),
               np.ascontiguousarray(v[:, 1] - v[:, 0]),
               np.ascontiguousarray(v[:, 2] - v[:, 0]),
               np.ascontiguousarray(owner[order]))


@numba.njit(**_jit)
def traverse(ox, oy, oz, dx, dy, dz, tmin, tmax, B):
    """Nearest hit in ``[tmin, tmax]``; returns ``(slot, t)`` with slot -1 on a miss."""
    node_lo, node_hi, left, right, start, count, axis_of, v0, e1, e2, owner = B
    ix = 1.0 / dx if dx != 0.0 else _TINY_INV
    iy = 1.0 / dy if dy != 0.0 else _TINY_INV
    iz = 1.0 / dz if dz != 0.0 else _TINY_INV
    stack = np.empty(_STACK, dtype=np.int64)
    sp = 0
    stack[0] = 0
    sp = 1
    best_t = tmax
    best = -1
    while sp > 0:
        sp -= 1
        ni = stack[sp]
        t1 = (node_lo[ni, 0] - ox) * ix
        t2 = (node_hi[ni, 0] - ox) * ix
        t0 = min(t1, t2)
        tf = max(t1, t2)
        t1 = (node_lo[ni, 1] - oy) * iy
        t2 = (node_hi[ni, 1] - oy) * iy
        t0 = max(t0, min(t1, t2))
        tf = min(tf, max(t1, t2))
        t1 = (node_lo[ni, 2] - oz) * iz
        t2 = (node_hi[ni, 2] - oz) * iz
        t0 = max(t0, min(t1, t2))
        tf = min(tf, max(t1, t2))
        if t0 > tf or tf < tmin or t0 > best_t:
            continue
        if left[ni] < 0:
            for k in range(start[ni], start[ni] + count[ni]):
                ax = e1[k, 0]
                ay = e1[k, 1]
                az = e1[k, 2]
                bx = e2[k, 0]
                by = e2[k, 1]
                bz = e2[k, 2]
                px = dy * bz - dz * by
                py = dz * bx - dx * bz
                pz = dx * by - dy * bx
                det = ax * px + ay * py + az * pz
                if abs(det) < _DET_EPS:
                    continue
                inv = 1.0 / det
                sx = ox - v0[k, 0]
                sy = oy - v0[k, 1]
                sz = oz - v0[k, 2]
                u = (sx * px + sy * py + sz * pz) * inv
                if u < 0.0 or u > 1.0:
                    continue
                qx = sy * az - sz * ay
                qy = sz * ax - sx * az
                qz = sx * ay - sy * ax
                v = (dx * qx + dy * qy + dz * qz) * inv
                if v < 0.0 or u + v > 1.0:
                    continue
                t = (bx * qx + by * qy + bz * qz) * inv
                if t >= tmin and t <= best_t and (best < 0 or t < best_t):
                    best_t = t
                    best = k
        else:
            a = axis_of[ni]
            neg = dx < 0.0 if a == 0 else (dy < 0.0 if a == 1 else dz < 0.0)
            if sp + 2 > _STACK:
                continue
            if neg:
                stack[sp] = left[ni]
                stack[sp + 1] = right[ni]
            else:
                stack[sp] = right[ni]
                stack[sp + 1] = left[ni]
            sp += 2
    return best, best_t


@numba.njit(**_jit)
def trace_one(ox, oy, oz, dx, dy, dz, tmin, tmax, B, dom, max_wraps):
    """Nearest hit of a ray in a laterally periodic scene.

    ``dom = (x0, y0, X, Y)``. The ray is followed cell by cell through the
    periodic lattice; inside each cell only hits before the lateral exit are
    accepted. Once ``max_wraps`` re-entries are used up the final segment runs
    unrestricted to ``tmax``. ``max_wraps == 0`` is plain, non-periodic casting.
    """
    if max_wraps <= 0:
        return traverse(ox, oy, oz, dx, dy, dz, tmin, tmax, B)
    node_lo = B[0]
    node_hi = B[1]
    zlo = node_lo[0, 2]
    zhi = node_hi[0, 2]
    x0 = dom[0]
    y0 = dom[1]
    X = dom[2]
    Y = dom[3]
    ci = np.floor((ox - x0) / X)
    cj = np.floor((oy - y0) / Y)
    t_enter = tmin
    wraps = 0
    while True:
        lx = ox - ci * X
        ly = oy - cj * Y
        if dx > 0.0:
            tx = (x0 + X - lx) / dx
        elif dx < 0.0:
            tx = (x0 - lx) / dx
        else:
            tx = np.inf
        if dy > 0.0:
            ty = (y0 + Y - ly) / dy
        elif dy < 0.0:
            ty = (y0 - ly) / dy
        else:
            ty = np.inf
        t_exit = min(tx, ty)
        last = wraps >= max_wraps
        seg_end = tmax if last else min(t_exit, tmax)
        slot, t = traverse(lx, ly, oz, dx, dy, dz, t_enter, seg_end, B)
        if slot >= 0:
            return slot, t
        if last or seg_end >= tmax or t_exit == np.inf:
            return -1, tmax
        z_exit = oz + dz * t_exit
        if (dz > 0.0 and z_exit > zhi) or (dz < 0.0 and z_exit < zlo):
            return -1, tmax
        if tx <= ty:
            ci += 1.0 if dx > 0.0 else -1.0
        if ty <= tx:
            cj += 1.0 if dy > 0.0 else -1.0
        t_enter = max(t_enter, t_exit)
        wraps += 1


WRAP_CAP = 1024


@numba.njit(**_jit)
def escape_wraps(oz, dx, dy, dz, tmax, B, dom, max_wraps):
    """Wrap budget that lets a ray reach the top or bottom of the scene's z-range.

    A fixed budget silently lets oblique rays escape through small domains;
    this returns ``max(max_wraps, cells crossed before leaving the z-slab)``,
    capped at ``WRAP_CAP`` for near-horizontal rays.
    """
    zlo = B[0][0, 2]
    zhi = B[1][0, 2]
    if dz > 0.0:
        t = (zhi - oz) / dz
    elif dz < 0.0:
        t = (zlo - oz) / dz
    else:
        t = np.inf
    t = min(max(t, 0.0), tmax)
    n = abs(dx) * t / dom[2] + abs(dy) * t / dom[3] + 2.0
    if not n < WRAP_CAP:
        return WRAP_CAP
    return max(max_wraps, int(n))


@numba.njit(parallel=True, **_jit)
def _trace_batch(origins, dirs, tmin, tmax, B, dom, max_wraps, out_slot, out_t):
    for i in prange(origins.shape[0]):
        slot, t = trace_one(origins[i, 0], origins[i, 1], origins[i, 2],
                            dirs[i, 0], dirs[i, 1], dirs[i, 2],
                            tmin[i], tmax[i], B, dom, max_wraps)
        out_slot[i] = slot
        out_t[i] = t


def _domain_array(domain: Optional[PeriodicDomain]):
    return np.zeros(4) if domain is None else domain.as_array()


def trace_rays(bvh: Bvh, origins, directions, t_min=0.0, t_max=np.inf,
               domain: Optional[PeriodicDomain] = None, max_wraps: int = 4):
    """Cast many rays. Returns ``(primitive_id, distance, front)``; misses have id -1."""
    o = np.ascontiguousarray(np.asarray(origins, dtype=float).reshape(-1, 3))
    d = np.ascontiguousarray(np.asarray(directions, dtype=float).reshape(-1, 3))
    n = len(o)
    tmin = np.ascontiguousarray(np.broadcast_to(np.asarray(t_min, dtype=float), (n,)))
    tmax = np.ascontiguousarray(np.broadcast_to(np.asarray(t_max, dtype=float), (n,)))
    slot = np.empty(n, dtype=np.int64)
    dist = np.empty(n)
    wraps = 0 if domain is None else int(max_wraps)
    _trace_batch(o, d, tmin, tmax, bvh.arrays, _domain_array(domain), wraps, slot, dist)
    hit = slot >= 0
    pid = np.where(hit, bvh.owner[np.where(hit, slot, 0)], -1)
    normals = np.cross(bvh.e1, bvh.e2)
    front = np.zeros(n, dtype=bool)
    front[hit] = np.einsum("ij,ij->i", normals[slot[hit]], d[hit]) < 0
    dist[~hit] = np.inf
    return pid, dist, front


def intersect(bvh: Bvh, ray: Ray, domain: Optional[PeriodicDomain] = None, max_wraps: int = 4) -> Optional[Hit]:
    """Nearest hit along ``ray`` or ``None``."""
    if max_wraps < 0:
        raise ValueError("max_wraps must be >= 0")
    pid, dist, front = trace_rays(bvh, ray.origin, ray.direction, ray.t_min, ray.t_max, domain, max_wraps)
    if pid[0] < 0:
        return None
    return Hit(int(pid[0]), float(dist[0]), bool(front[0]))
