import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from canopy_par.bvh import build_bvh, intersect, trace_rays
from canopy_par.geometry import (Hit, Mesh, Organ, PeriodicDomain, Ray, Triangle, heading_vector, periodic_images,
                                 transform)

from oracles import brute_periodic, nearest, random_triangles, random_unit

finite = st.floats(-10, 10, allow_nan=False)


def test_mesh_basics():
    m = Mesh(np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]]))
    assert len(m) == 1
    assert m.areas[0] == pytest.approx(0.5)
    assert m.organ[0] == Organ.LEAF
    tri = m.triangle(0)
    assert isinstance(tri, Triangle) and tri.primitive_id == 0 and tri.area == pytest.approx(0.5)
    assert np.allclose(m.normals[0], [0, 0, 1])
    assert m.bbox.contains(m.vertices)


def test_mesh_roundtrip_via_triangles():
    rng = np.random.default_rng(1)
    m = Mesh(random_triangles(rng, 20), plant_id=np.arange(20), organ=Organ.STEM)
    again = Mesh.from_triangles(list(m))
    assert np.array_equal(again.vertices, m.vertices)
    assert np.array_equal(again.plant_id, m.plant_id)
    assert np.all(again.organ == Organ.STEM)


def test_drop_degenerate():
    tris = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 0, 0], [1, 0, 0], [2, 0, 0]]], float)
    assert len(Mesh(tris).drop_degenerate()) == 1


def test_ray_validation():
    with pytest.raises(ValueError):
        Ray(np.zeros(3), np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        Ray(np.zeros(3), np.array([0, 0, 1.0]), t_min=-1.0)
    with pytest.raises(ValueError):
        Ray(np.zeros(3), np.array([0, 0, 1.0]), t_min=2.0, t_max=1.0)


def test_domain_validation():
    with pytest.raises(ValueError):
        PeriodicDomain(0.0, 1.0)


def test_heading_convention():
    assert np.allclose(heading_vector(0.0), [0, 1, 0])
    assert np.allclose(heading_vector(math.pi / 2), [1, 0, 0])


def test_transform_identity():
    rng = np.random.default_rng(2)
    m = Mesh(random_triangles(rng, 10))
    assert np.array_equal(transform(m).vertices, m.vertices)


def test_transform_half_turn():
    m = Mesh(np.array([[[1, 0, 0], [1, 1, 0], [2, 0, 0]]], float))
    out = transform(m, math.pi)
    assert np.allclose(out.vertices[0, 0], [-1, 0, 0], atol=1e-12)


def test_transform_yaw_adds_to_heading():
    m = Mesh(np.array([[heading_vector(0.3), [0, 0, 1.0], [0, 0, 0.0]]]))
    out = transform(m, 0.5)
    assert np.allclose(out.vertices[0, 0], heading_vector(0.8), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(yaw=st.floats(-7, 7), tx=finite, ty=finite, tz=finite, seed=st.integers(0, 2**32 - 1))
def test_transform_is_rigid(yaw, tx, ty, tz, seed):
    rng = np.random.default_rng(seed)
    m = Mesh(random_triangles(rng, 8))
    out = transform(m, yaw, (tx, ty, tz), anchor=rng.normal(size=3))
    assert out.total_area == pytest.approx(m.total_area, rel=1e-9)
    d0 = np.linalg.norm(m.vertices[:, 0] - m.vertices[:, 1], axis=1)
    d1 = np.linalg.norm(out.vertices[:, 0] - out.vertices[:, 1], axis=1)
    assert np.allclose(d0, d1, rtol=1e-9)


def test_periodic_images_cover_domain():
    dom = PeriodicDomain(1.0, 1.0)
    m = Mesh(np.array([[[0.9, 0.5, 0], [1.2, 0.5, 0], [0.9, 0.7, 0]]], float))
    verts, owner = periodic_images(m, dom)
    assert len(verts) == 2 and np.all(owner == 0)
    assert np.allclose(verts[1], m.vertices[0] - [1, 0, 0])


# -- BVH ------------------------------------------------------------------------------------------


def test_bvh_single_triangle_is_one_leaf():
    b = build_bvh(Mesh(np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], float)))
    assert b.n_nodes == 1 and b.node_left[0] < 0 and b.node_count[0] == 1


def test_bvh_empty_rejected():
    with pytest.raises(ValueError):
        build_bvh(Mesh.empty())


def test_bvh_leaves_hold_every_primitive_once():
    rng = np.random.default_rng(3)
    b = build_bvh(Mesh(random_triangles(rng, 10_000, box=10.0, size=0.1)))
    assert np.array_equal(np.sort(b.leaf_primitives()), np.arange(10_000))


def test_bvh_nodes_enclose_children():
    rng = np.random.default_rng(4)
    tris = random_triangles(rng, 2000, box=5.0, size=0.2)
    b = build_bvh(Mesh(tris))
    for n in range(b.n_nodes):
        if b.node_left[n] >= 0:
            for c in (b.node_left[n], b.node_right[n]):
                assert np.all(b.node_lo[n] <= b.node_lo[c]) and np.all(b.node_hi[n] >= b.node_hi[c])
        else:
            idx = b.order[b.node_start[n]:b.node_start[n] + b.node_count[n]]
            v = tris[idx].reshape(-1, 3)
            assert np.all(v >= b.node_lo[n] - 1e-12) and np.all(v <= b.node_hi[n] + 1e-12)


def test_bvh_build_deterministic():
    rng = np.random.default_rng(5)
    tris = random_triangles(rng, 500)
    a, b = build_bvh(Mesh(tris)), build_bvh(Mesh(tris))
    for x, y in zip(a.arrays, b.arrays):
        assert np.array_equal(x, y)


def test_duplicate_triangles_both_hittable():
    t = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float)
    b = build_bvh(Mesh(np.stack([t, t])))
    pid, dist, _ = trace_rays(b, [[0.2, 0.2, 1.0]], [[0, 0, -1.0]])
    assert pid[0] in (0, 1) and dist[0] == pytest.approx(1.0)
    assert np.array_equal(np.sort(b.leaf_primitives()), [0, 1])
    # shift one copy a hair upward: each becomes the nearest from its own side
    b2 = build_bvh(Mesh(np.stack([t, t + [0, 0, 1e-3]])))
    assert trace_rays(b2, [[0.2, 0.2, 1.0]], [[0, 0, -1.0]])[0][0] == 1
    assert trace_rays(b2, [[0.2, 0.2, -1.0]], [[0, 0, 1.0]])[0][0] == 0


def test_ray_pointing_away_misses():
    rng = np.random.default_rng(6)
    b = build_bvh(Mesh(random_triangles(rng, 100)))
    assert intersect(b, Ray(np.array([0.5, 0.5, 5.0]), np.array([0, 0, 1.0]))) is None


def test_hit_fields_and_front_face():
    b = build_bvh(Mesh(np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], float)))
    h = intersect(b, Ray(np.array([0.2, 0.2, 2.0]), np.array([0, 0, -1.0])))
    assert isinstance(h, Hit) and h.primitive_id == 0 and h.distance == pytest.approx(2.0)
    assert h.entering_front_face
    h2 = intersect(b, Ray(np.array([0.2, 0.2, -2.0]), np.array([0, 0, 1.0])))
    assert not h2.entering_front_face


def test_t_range_respected():
    b = build_bvh(Mesh(np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], float)))
    assert intersect(b, Ray(np.array([0.2, 0.2, 2.0]), np.array([0, 0, -1.0]), 0.0, 1.5)) is None
    assert intersect(b, Ray(np.array([0.2, 0.2, 2.0]), np.array([0, 0, -1.0]), 2.5, 9.0)) is None


def test_wrap_example():
    dom = PeriodicDomain(1.0, 1.0)
    tri = np.array([[[0.05, 0.2, -0.5], [0.05, 0.8, -0.5], [0.05, 0.5, 0.5]]])
    b = build_bvh(Mesh(tri))
    ray = Ray(np.array([0.95, 0.5, 0.0]), np.array([1.0, 0, 0]))
    h = intersect(b, ray, dom)
    assert h is not None and h.primitive_id == 0 and h.distance == pytest.approx(0.10, abs=1e-12)
    assert intersect(b, ray) is None


def test_wrap_budget_exhausted_is_miss():
    dom = PeriodicDomain(1.0, 1.0)
    tri = np.array([[[0.5, 0.5, 0.9], [0.6, 0.5, 0.9], [0.5, 0.6, 0.9]]])
    b = build_bvh(Mesh(tri))
    d = np.array([1.0, 0.0, 0.05])
    d /= np.linalg.norm(d)
    # the ray climbs 0.9 m only after ~18 domain crossings
    ray = Ray(np.array([0.55, 0.52, 0.0]), d)
    assert intersect(b, ray, dom, max_wraps=4) is None
    assert intersect(b, ray, dom, max_wraps=30) is not None


@pytest.mark.parametrize("periodic", [False, True])
def test_bvh_matches_brute_force(periodic):
    rng = np.random.default_rng(11 + periodic)
    for _ in range(5):
        tris = random_triangles(rng, 300)
        dom = (0.0, 0.0, 1.0, 1.0)
        if periodic:
            verts, owner = periodic_images(Mesh(tris), PeriodicDomain(1.0, 1.0))
            b = build_bvh(verts, owner)
        else:
            b = build_bvh(Mesh(tris))
        o = np.column_stack([rng.uniform(0, 1, 100), rng.uniform(0, 1, 100), rng.uniform(-0.5, 1.5, 100)])
        d = random_unit(rng, 100)
        pid, dist, _ = trace_rays(b, o, d, domain=PeriodicDomain(1.0, 1.0) if periodic else None)
        for i in range(100):
            k, t = brute_periodic(o[i], d[i], tris, dom, 4 if periodic else 0)
            assert pid[i] == k
            if k >= 0:
                assert abs(dist[i] - t) < 1e-9


def test_zero_wraps_equals_plain():
    rng = np.random.default_rng(12)
    tris = random_triangles(rng, 200)
    verts, owner = periodic_images(Mesh(tris), PeriodicDomain(1.0, 1.0))
    b = build_bvh(verts, owner)
    o = rng.uniform(0, 1, (300, 3))
    d = random_unit(rng, 300)
    a = trace_rays(b, o, d, domain=PeriodicDomain(1.0, 1.0), max_wraps=0)
    c = trace_rays(b, o, d)
    assert np.array_equal(a[0], c[0]) and np.array_equal(a[1], c[1])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_plain_nearest_hit_property(seed):
    rng = np.random.default_rng(seed)
    tris = random_triangles(rng, 40)
    b = build_bvh(Mesh(tris))
    o = rng.uniform(-0.5, 1.5, (20, 3))
    d = random_unit(rng, 20)
    pid, dist, _ = trace_rays(b, o, d)
    for i in range(20):
        k, t = nearest(o[i], d[i], tris, 0.0, math.inf)
        assert pid[i] == k
        if k >= 0:
            assert abs(dist[i] - t) < 1e-9
