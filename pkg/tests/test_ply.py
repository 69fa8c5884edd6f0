import struct

import numpy as np
import pytest

from canopy_par.geometry import Mesh, Organ
from canopy_par.plantgen import PlantParams, generate_maize
from canopy_par.ply import PlyError, load_ply, save_ply


def write(tmp_path, text, name="m.ply"):
    p = tmp_path / name
    p.write_bytes(text.encode() if isinstance(text, str) else text)
    return p


ONE_TRI = """ply
format ascii 1.0
element vertex 3
property float x
property float y
property float z
element face 1
property list uchar int vertex_indices
end_header
0 0 0
1 0 0
0 1 0
3 0 1 2
"""


def test_single_triangle(tmp_path):
    m = load_ply(write(tmp_path, ONE_TRI))
    assert len(m) == 1
    assert m.areas[0] == pytest.approx(0.5)
    assert m.organ[0] == Organ.LEAF


def test_unit_scaling(tmp_path):
    m = load_ply(write(tmp_path, ONE_TRI), unit="cm")
    assert m.areas[0] == pytest.approx(0.5e-4)
    assert load_ply(write(tmp_path, ONE_TRI), unit="inch").vertices.max() == pytest.approx(0.0254)
    with pytest.raises(ValueError):
        load_ply(write(tmp_path, ONE_TRI), unit="furlong")


def test_quad_fan_triangulated(tmp_path):
    text = """ply
format ascii 1.0
element vertex 4
property double x
property double y
property double z
element face 1
property list uchar int vertex_indices
end_header
0 0 0
2 0 0
2 3 0
0 3 0
4 0 1 2 3
"""
    m = load_ply(write(tmp_path, text))
    assert len(m) == 2
    assert m.total_area == pytest.approx(6.0)


def test_face_and_vertex_organ_labels(tmp_path):
    face_lbl = ONE_TRI.replace("property list uchar int vertex_indices",
                               "property list uchar int vertex_indices\nproperty uchar organ")
    face_lbl = face_lbl.replace("3 0 1 2", "3 0 1 2 1")
    assert load_ply(write(tmp_path, face_lbl)).organ[0] == Organ.STEM
    vert_lbl = ONE_TRI.replace("property float z", "property float z\nproperty uchar organ")
    vert_lbl = vert_lbl.replace("0 0 0\n1 0 0\n0 1 0", "0 0 0 2\n1 0 0 2\n0 1 0 2")
    assert load_ply(write(tmp_path, vert_lbl)).organ[0] == Organ.GROUND


def test_binary_little_endian(tmp_path):
    head = ("ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\n"
            "property float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n").encode()
    body = struct.pack("<9f", 0, 0, 0, 1, 0, 0, 0, 1, 0) + struct.pack("<B3i", 3, 0, 1, 2)
    m = load_ply(write(tmp_path, head + body))
    assert m.areas[0] == pytest.approx(0.5)


@pytest.mark.parametrize("text", [
    "not a ply\n",
    "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\n",  # no end_header
    "ply\nformat binary_big_endian 1.0\nend_header\n",
])
def test_malformed_header(tmp_path, text):
    with pytest.raises(PlyError):
        load_ply(write(tmp_path, text))


def test_two_vertex_face_rejected(tmp_path):
    with pytest.raises(PlyError):
        load_ply(write(tmp_path, ONE_TRI.replace("3 0 1 2", "2 0 1")))


def test_bad_index_rejected(tmp_path):
    with pytest.raises(PlyError):
        load_ply(write(tmp_path, ONE_TRI.replace("3 0 1 2", "3 0 1 7")))


def test_empty_mesh_rejected(tmp_path):
    text = ONE_TRI.replace("element face 1", "element face 0").replace("3 0 1 2\n", "")
    with pytest.raises(PlyError):
        load_ply(write(tmp_path, text))


def test_degenerate_only_rejected(tmp_path):
    with pytest.raises(PlyError):
        load_ply(write(tmp_path, ONE_TRI.replace("0 1 0\n", "2 0 0\n")))


@pytest.mark.parametrize("binary", [True, False])
def test_roundtrip_generated_plant(tmp_path, binary):
    plant = generate_maize(PlantParams(seed=3))
    p = tmp_path / "plant.ply"
    save_ply(plant.mesh, p, binary=binary)
    back = load_ply(p)
    assert len(back) == len(plant.mesh)
    assert np.max(np.abs(back.vertices - plant.mesh.vertices)) < 1e-6
    assert np.array_equal(back.organ, plant.mesh.organ)
    assert np.array_equal(back.plant_id, plant.mesh.plant_id)


def test_save_is_deterministic(tmp_path):
    plant = generate_maize(PlantParams(seed=9))
    save_ply(plant.mesh, tmp_path / "a.ply")
    save_ply(plant.mesh, tmp_path / "b.ply")
    assert (tmp_path / "a.ply").read_bytes() == (tmp_path / "b.ply").read_bytes()


def test_negative_plant_ids_survive(tmp_path):
    m = Mesh(np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], float), -1, Organ.GROUND)
    save_ply(m, tmp_path / "g.ply")
    back = load_ply(tmp_path / "g.ply")
    assert back.plant_id[0] == -1 and back.organ[0] == Organ.GROUND
