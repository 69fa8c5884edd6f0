"""Slow, independent reference implementations used by the tests."""
import math

import numpy as np


def ray_triangles(o, d, tris):
    """Distances of ray ``o + t d`` to every triangle (inf where missed), via a 3x3 solve."""
    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0
    a = np.stack([-np.broadcast_to(d, e1.shape), e1, e2], axis=2)
    out = np.full(len(tris), np.inf)
    det = np.linalg.det(a)
    ok = np.abs(det) > 1e-15
    if ok.any():
        sol = np.linalg.solve(a[ok], (o - v0[ok])[..., None])[..., 0]
        t, u, v = sol.T
        inside = (u >= 0) & (v >= 0) & (u + v <= 1)
        idx = np.flatnonzero(ok)[inside]
        out[idx] = t[inside]
    return out


def nearest(o, d, tris, tmin, tmax):
    t = ray_triangles(np.asarray(o, float), np.asarray(d, float), tris)
    t[(t < tmin) | (t > tmax)] = np.inf
    k = int(np.argmin(t))
    return (k, float(t[k])) if math.isfinite(t[k]) else (-1, math.inf)


def domain_images(tris, x0, y0, X, Y, reach=4):
    """Every lattice copy of every triangle whose footprint overlaps the domain cell."""
    verts, owner = [], []
    lo = tris.min(axis=1)
    hi = tris.max(axis=1)
    for kx in range(-reach, reach + 1):
        for ky in range(-reach, reach + 1):
            sx, sy = kx * X, ky * Y
            sel = (hi[:, 0] + sx > x0) & (lo[:, 0] + sx < x0 + X) & (hi[:, 1] + sy > y0) & (lo[:, 1] + sy < y0 + Y)
            if sel.any():
                verts.append(tris[sel] + np.array([sx, sy, 0.0]))
                owner.append(np.flatnonzero(sel))
    return np.concatenate(verts), np.concatenate(owner)


def brute_periodic(o, d, tris, dom, max_wraps, tmin=0.0, tmax=math.inf):
    """Brute-force counterpart of the periodic cell walk.

    The ray visits lattice cells in order; in each cell it may only hit the
    domain's image set (shifted into that cell) before leaving it laterally.
    After ``max_wraps`` cell changes the last segment is unrestricted.
    """
    x0, y0, X, Y = dom
    if max_wraps == 0:
        return nearest(o, d, tris, tmin, tmax)
    imgs, owner = domain_images(tris, x0, y0, X, Y)
    o = np.asarray(o, float)
    d = np.asarray(d, float)
    ci = math.floor((o[0] - x0) / X)
    cj = math.floor((o[1] - y0) / Y)
    t0 = tmin
    for wraps in range(max_wraps + 1):
        bx0, by0 = x0 + ci * X, y0 + cj * Y
        tx = ((bx0 + X - o[0]) / d[0] if d[0] > 0 else (bx0 - o[0]) / d[0]) if d[0] != 0 else math.inf
        ty = ((by0 + Y - o[1]) / d[1] if d[1] > 0 else (by0 - o[1]) / d[1]) if d[1] != 0 else math.inf
        t_exit = min(tx, ty)
        last = wraps == max_wraps
        end = tmax if last else min(t_exit, tmax)
        k, t = nearest(o, d, imgs + np.array([ci * X, cj * Y, 0.0]), t0, end)
        if k >= 0:
            return int(owner[k]), t
        if last or end >= tmax or not math.isfinite(t_exit):
            return -1, math.inf
        if tx <= ty:
            ci += 1 if d[0] > 0 else -1
        if ty <= tx:
            cj += 1 if d[1] > 0 else -1
        t0 = max(t0, t_exit)
    return -1, math.inf


def r_squared_textbook(y, f):
    """Coefficient of determination written out as a spreadsheet would compute it."""
    n = len(y)
    mean = sum(y) / n
    ss_tot = 0.0
    ss_res = 0.0
    for yi, fi in zip(y, f):
        ss_tot += (yi - mean) * (yi - mean)
        ss_res += (yi - fi) * (yi - fi)
    return 1.0 - ss_res / ss_tot


def random_triangles(rng, n, box=1.0, size=0.3, z=(0.0, 1.0)):
    c = np.column_stack([rng.uniform(0, box, n), rng.uniform(0, box, n), rng.uniform(*z, n)])
    return c[:, None, :] + rng.uniform(-size, size, (n, 3, 3))


def random_unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def ray_triangle_matrix(O, D, tris):
    """``(rays, triangles)`` hit distances (inf where missed) by Cramer's rule on ``[-d, e1, e2]``."""
    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0
    n = np.cross(e1, e2)                                    # (T, 3)
    det = -(D @ n.T)                                        # det[-d, e1, e2] = -d . (e1 x e2)
    b = O[:, None, :] - v0[None]                            # (R, T, 3)
    num_t = np.einsum("rtk,tk->rt", b, n)                   # det[b, e1, e2]
    bxe2 = np.cross(b, e2[None])
    e1xb = np.cross(e1[None], b)
    num_u = -np.einsum("rk,rtk->rt", D, bxe2)               # det[-d, b, e2]
    num_v = -np.einsum("rk,rtk->rt", D, e1xb)               # det[-d, e1, b]
    with np.errstate(divide="ignore", invalid="ignore"):
        t, u, v = num_t / det, num_u / det, num_v / det
    hit = (np.abs(det) > 1e-15) & (u >= 0) & (v >= 0) & (u + v <= 1)
    return np.where(hit, t, np.inf)


def nearest_batch(O, D, tris, tmin, tmax):
    t = ray_triangle_matrix(O, D, tris)
    t[(t < tmin[:, None]) | (t > tmax[:, None])] = np.inf
    k = np.argmin(t, axis=1)
    best = t[np.arange(len(O)), k]
    miss = ~np.isfinite(best)
    return np.where(miss, -1, k), np.where(miss, np.inf, best)


def brute_periodic_batch(O, D, tris, dom, max_wraps):
    """Vectorised :func:`brute_periodic` over many rays (``t_min = 0``, no upper limit)."""
    O = np.asarray(O, float)
    D = np.asarray(D, float)
    n = len(O)
    if max_wraps == 0:
        return nearest_batch(O, D, tris, np.zeros(n), np.full(n, np.inf))
    x0, y0, X, Y = dom
    imgs, owner = domain_images(tris, x0, y0, X, Y)
    ci = np.floor((O[:, 0] - x0) / X)
    cj = np.floor((O[:, 1] - y0) / Y)
    t0 = np.zeros(n)
    out_k = np.full(n, -1)
    out_t = np.full(n, np.inf)
    live = np.ones(n, bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for wraps in range(max_wraps + 1):
            idx = np.flatnonzero(live)
            if not len(idx):
                break
            o, d = O[idx], D[idx]
            bx0, by0 = x0 + ci[idx] * X, y0 + cj[idx] * Y
            tx = np.where(d[:, 0] > 0, (bx0 + X - o[:, 0]) / d[:, 0],
                          np.where(d[:, 0] < 0, (bx0 - o[:, 0]) / d[:, 0], np.inf))
            ty = np.where(d[:, 1] > 0, (by0 + Y - o[:, 1]) / d[:, 1],
                          np.where(d[:, 1] < 0, (by0 - o[:, 1]) / d[:, 1], np.inf))
            t_exit = np.minimum(tx, ty)
            last = wraps == max_wraps
            end = np.full(len(idx), np.inf) if last else t_exit
            shift = np.column_stack([ci[idx] * X, cj[idx] * Y, np.zeros(len(idx))])
            k, t = nearest_batch(o - shift, d, imgs, t0[idx], end)
            got = k >= 0
            out_k[idx[got]] = owner[k[got]]
            out_t[idx[got]] = t[got]
            live[idx[got]] = False
            gone = ~got & ~np.isfinite(t_exit)
            live[idx[gone]] = False
            step = idx[~got & ~gone]
            txs, tys = tx[~got & ~gone], ty[~got & ~gone]
            ci[step] += np.where(txs <= tys, np.sign(D[step, 0]), 0)
            cj[step] += np.where(tys <= txs, np.sign(D[step, 1]), 0)
            t0[step] = np.maximum(t0[step], t_exit[~got & ~gone])
    return out_k, out_t
