import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from canopy_par.field import (INCH, OFF_ROW, ON_ROW, RANDOM, FieldLayout, Orientation, OrientationMode,
                              build_field, convert_spacing)
from canopy_par.geometry import Organ, transform
from canopy_par.plantgen import PlantParams, estimate_leaf_plane_azimuth, generate_maize
from canopy_par.radiation import RadiationConfig, compute_direct
from canopy_par.solar import SolarState


@pytest.fixture(scope="module")
def plant():
    return generate_maize(PlantParams(seed=7))


def axis_diff(a, b):
    d = (a - b) % math.pi
    return min(d, math.pi - d)


def test_convert_spacing():
    assert convert_spacing(30, "inch") == pytest.approx(0.762, abs=1e-12)
    assert convert_spacing(6, "inch") == pytest.approx(0.1524, abs=1e-12)
    assert convert_spacing(76.2, "cm") == pytest.approx(0.762, abs=1e-12)
    assert convert_spacing(0.5) == 0.5
    with pytest.raises(ValueError):
        convert_spacing(1, "yard")
    with pytest.raises(ValueError):
        convert_spacing(0, "m")


def test_baseline_density(plant):
    lay = FieldLayout(plant)
    # 30 in x 6 in is about 86,100 plants per hectare
    assert lay.density * 1e4 == pytest.approx(1e4 / (0.762 * 0.1524), rel=1e-12)
    assert abs(lay.density * 1e4 - 84_000) / 84_000 < 0.05


def test_orientation_parse():
    assert OrientationMode.parse("OffRowParallel") == OFF_ROW
    assert OrientationMode.parse("on-row") == ON_ROW
    assert OrientationMode.parse("random:12") == RANDOM(12)
    assert RANDOM(3).label == "random:3"
    with pytest.raises(ValueError):
        OrientationMode.parse("sideways")


def test_layout_validation(plant):
    with pytest.raises(ValueError):
        build_field(FieldLayout(plant, rows=0))
    with pytest.raises(ValueError):
        build_field(FieldLayout(plant, row_spacing=-1))
    with pytest.raises(ValueError):
        build_field(FieldLayout([plant] * 3, rows=2, plants_per_row=2))


def test_domain_and_counts(plant):
    sc = build_field(FieldLayout(plant, rows=2, plants_per_row=4))
    assert sc.domain.x_extent == pytest.approx(4 * 6 * INCH)
    assert sc.domain.y_extent == pytest.approx(2 * 30 * INCH)
    assert sc.ground_area == pytest.approx(sc.domain.area)
    assert list(sc.plant_ids) == list(range(8))
    ground = sc.mesh.areas[sc.mesh.organ == Organ.GROUND].sum()
    assert ground == pytest.approx(sc.domain.area, rel=1e-12)


@pytest.mark.parametrize("mode,offset", [(ON_ROW, 0.0), (OFF_ROW, math.pi / 2)])
@pytest.mark.parametrize("row_az", [0.0, math.pi / 2, math.radians(37)])
def test_per_plant_orientation(plant, mode, offset, row_az):
    sc = build_field(FieldLayout(plant, rows=2, plants_per_row=3, orientation=mode, row_azimuth=row_az))
    for pid in sc.plant_ids:
        got = estimate_leaf_plane_azimuth(sc.plant_mesh(pid, world=True))
        assert axis_diff(got, row_az + offset) < 1e-3


def test_off_row_in_north_south_rows_is_east_west(plant):
    sc = build_field(FieldLayout(plant, rows=1, plants_per_row=2, orientation=OFF_ROW))
    assert axis_diff(estimate_leaf_plane_azimuth(sc.plant_mesh(0)), math.pi / 2) < 1e-3


def test_random_is_deterministic(plant):
    lay = FieldLayout(plant, rows=2, plants_per_row=5, orientation=RANDOM(4))
    a, b = build_field(lay), build_field(lay)
    assert np.array_equal(a.mesh.vertices, b.mesh.vertices)
    c = build_field(FieldLayout(plant, rows=2, plants_per_row=5, orientation=RANDOM(5)))
    assert not np.array_equal(a.mesh.vertices, c.mesh.vertices)
    axes = [estimate_leaf_plane_azimuth(a.plant_mesh(p)) for p in a.plant_ids]
    assert np.ptp(np.mod(axes, math.pi)) > 0.5


def test_plants_sit_on_grid(plant):
    lay = FieldLayout(plant, rows=3, plants_per_row=4, row_azimuth=math.radians(20))
    sc = build_field(lay)
    for pid, pos in sc.plant_positions:
        j, i = divmod(pid, 4)
        base = sc.plant_mesh(pid, world=True)
        stem = base.subset(base.organ == Organ.STEM)
        lo = stem.vertices.reshape(-1, 3)
        bottom = lo[lo[:, 2] < 1e-9][:, :2].mean(axis=0)
        assert np.allclose(bottom, pos[:2], atol=1e-9)
        assert np.hypot(*pos[:2]) == pytest.approx(np.hypot(i * lay.plant_spacing, j * lay.row_spacing))


@settings(max_examples=10, deadline=None)
@given(az=st.floats(0, 2 * math.pi))
def test_row_azimuth_only_changes_the_frame(plant, az):
    base = build_field(FieldLayout(plant, rows=1, plants_per_row=3))
    turned = build_field(FieldLayout(plant, rows=1, plants_per_row=3, row_azimuth=az))
    # leaf axes are defined mod pi, so a plant may come out half-turned about its own base
    for pid in base.plant_ids:
        a = base.plant_mesh(pid, world=False)
        b = turned.plant_mesh(pid, world=False)
        anchor = np.array([pid * base.layout.plant_spacing, 0.0, 0.0])
        flipped = transform(a, math.pi, anchor=anchor)
        assert (np.allclose(a.vertices, b.vertices, atol=1e-9)
                or np.allclose(flipped.vertices, b.vertices, atol=1e-9))
    assert turned.frame_yaw == pytest.approx(math.pi / 2 - az)


def test_world_to_field_round_trip(plant):
    sc = build_field(FieldLayout(plant, rows=1, plants_per_row=2, row_azimuth=0.7))
    v = np.array([[0.3, -0.2, 0.9]])
    assert np.allclose(sc.to_world(sc.to_field(v)), v)
    # the row direction maps to +x
    row = np.array([[math.sin(0.7), math.cos(0.7), 0.0]])
    assert np.allclose(sc.to_field(row), [[1, 0, 0]], atol=1e-12)


def test_tiling_is_seamless(plant):
    """Images of the domain shifted by one period reproduce the neighbouring plants exactly."""
    lay = FieldLayout(plant, rows=2, plants_per_row=3)
    small = build_field(lay)
    big = build_field(FieldLayout(plant, rows=4, plants_per_row=6))
    X, Y = small.domain.x_extent, small.domain.y_extent
    canopy = small.mesh.subset(small.mesh.organ != Organ.GROUND)
    for sx, sy in ((0, 0), (1, 0), (0, 1), (1, 1)):
        shifted = canopy.vertices + [sx * X, sy * Y, 0]
        ref = np.concatenate([big.mesh.subset(big.mesh.plant_id == (j + 2 * sy) * 6 + i + 3 * sx).vertices
                              for j in range(2) for i in range(3)])
        assert np.allclose(np.sort(shifted.reshape(-1), kind="stable"), np.sort(ref.reshape(-1), kind="stable"),
                           atol=1e-9)


def test_dense_field_direct_energy(plant):
    """Tightly packed identical plants must not intercept more direct light than falls on the domain."""
    cfg = RadiationConfig(direct_samples_per_primitive=64, rng_seed=1)
    for mode in (OFF_ROW, ON_ROW):
        sc = build_field(FieldLayout(plant, rows=2, plants_per_row=8, plant_spacing=1 * INCH, orientation=mode))
        for zen, az in ((0.2, 3.0), (0.8, 1.3)):
            sun = SolarState(zen, az, 1500.0, 0.0)
            fm = compute_direct(sc, sun, cfg)
            landed = float((fm.incident_direct * sc.mesh.areas).sum())
            # every unblocked beam lands exactly once: canopy plus ground equals the beam on the domain
            assert landed == pytest.approx(fm.incident_power, rel=0.02)
            assert fm.incident_power == pytest.approx(1500.0 * math.cos(zen) * sc.ground_area)


def test_orientation_enum_values():
    assert {o.value for o in Orientation} == {"on_row", "off_row", "random"}
