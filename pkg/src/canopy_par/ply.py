"""PLY reading and writing (ASCII and binary little-endian).

Faces with more than three vertices are fan-triangulated. An optional integer
``organ`` property on faces (or vertices) maps onto :class:`Organ`; an optional
``plant_id`` face property is carried through as well.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import Mesh, Organ

log = logging.getLogger(__name__)

UNIT_SCALE = {"m": 1.0, "cm": 0.01, "mm": 0.001, "inch": 0.0254}

_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


class PlyError(ValueError):
    pass


@dataclass
class _Element:
    name: str
    count: int
    props: list = field(default_factory=list)  # (name, dtype) or (name, count_dtype, item_dtype)


def _parse_header(fh):
    magic = fh.readline().strip()
    if magic != b"ply":
        raise PlyError("missing 'ply' magic line")
    fmt = None
    elements = []
    while True:
        raw = fh.readline()
        if not raw:
            raise PlyError("header ended without end_header")
        words = raw.decode("ascii", errors="replace").split()
        if not words or words[0] in ("comment", "obj_info"):
            continue
        key = words[0]
        if key == "format":
            if len(words) < 2 or words[1] not in ("ascii", "binary_little_endian"):
                raise PlyError(f"unsupported format line: {raw!r}")
            fmt = words[1]
        elif key == "element":
            if len(words) != 3:
                raise PlyError(f"malformed element line: {raw!r}")
            elements.append(_Element(words[1], int(words[2])))
        elif key == "property":
            if not elements:
                raise PlyError("property before any element")
            try:
                if words[1] == "list":
                    elements[-1].props.append((words[4], _TYPES[words[2]], _TYPES[words[3]]))
                else:
                    elements[-1].props.append((words[2], _TYPES[words[1]]))
            except (IndexError, KeyError):
                raise PlyError(f"malformed property line: {raw!r}") from None
        elif key == "end_header":
            break
        else:
            raise PlyError(f"unknown header keyword {key!r}")
    if fmt is None:
        raise PlyError("missing format line")
    return fmt, elements


def _read_ascii(fh, elements):
    tokens = fh.read().split()
    pos = 0
    data = {}
    for el in elements:
        scalar = all(len(p) == 2 for p in el.props)
        if scalar:
            width = len(el.props)
            block = np.array(tokens[pos:pos + width * el.count], dtype=float)
            if block.size != width * el.count:
                raise PlyError(f"truncated {el.name} data")
            block = block.reshape(el.count, width)
            pos += width * el.count
            data[el.name] = {p[0]: block[:, k] for k, p in enumerate(el.props)}
            continue
        cols = {p[0]: [] for p in el.props}
        for _ in range(el.count):
            for p in el.props:
                if len(p) == 3:
                    n = int(tokens[pos])
                    cols[p[0]].append([int(float(t)) for t in tokens[pos + 1:pos + 1 + n]])
                    pos += 1 + n
                else:
                    cols[p[0]].append(float(tokens[pos]))
                    pos += 1
        data[el.name] = cols
    return data


def _read_binary(fh, elements):
    buf = fh.read()
    pos = 0
    data = {}
    for el in elements:
        if all(len(p) == 2 for p in el.props):
            dt = np.dtype([(p[0], "<" + p[1]) for p in el.props])
            nbytes = dt.itemsize * el.count
            if pos + nbytes > len(buf):
                raise PlyError(f"truncated {el.name} data")
            arr = np.frombuffer(buf, dtype=dt, count=el.count, offset=pos)
            pos += nbytes
            data[el.name] = {p[0]: arr[p[0]] for p in el.props}
            continue
        cols = {p[0]: [] for p in el.props}
        try:
            for _ in range(el.count):
                for p in el.props:
                    if len(p) == 3:
                        cdt = np.dtype("<" + p[1])
                        n = int(np.frombuffer(buf, cdt, 1, pos)[0])
                        pos += cdt.itemsize
                        idt = np.dtype("<" + p[2])
                        cols[p[0]].append(np.frombuffer(buf, idt, n, pos).astype(np.int64).tolist())
                        pos += idt.itemsize * n
                    else:
                        sdt = np.dtype("<" + p[1])
                        cols[p[0]].append(float(np.frombuffer(buf, sdt, 1, pos)[0]))
                        pos += sdt.itemsize
        except ValueError:
            raise PlyError(f"truncated {el.name} data") from None
        data[el.name] = cols
    return data


def load_ply(path, unit: str = "m") -> Mesh:
    """Read a PLY file into a :class:`Mesh`, scaling coordinates from ``unit`` to metres."""
    if unit not in UNIT_SCALE:
        raise ValueError(f"unknown unit {unit!r}; expected one of {sorted(UNIT_SCALE)}")
    with open(path, "rb") as fh:
        fmt, elements = _parse_header(fh)
        data = _read_ascii(fh, elements) if fmt == "ascii" else _read_binary(fh, elements)
    if "vertex" not in data or "face" not in data:
        raise PlyError("PLY needs vertex and face elements")
    vert = data["vertex"]
    try:
        xyz = np.column_stack([np.asarray(vert[k], dtype=float) for k in "xyz"]) * UNIT_SCALE[unit]
    except KeyError:
        raise PlyError("vertex element lacks x/y/z") from None
    faces = data["face"]
    key = "vertex_indices" if "vertex_indices" in faces else "vertex_index"
    if key not in faces:
        raise PlyError("face element lacks a vertex index list")
    v_organ = np.asarray(vert["organ"], dtype=np.int64) if "organ" in vert else None
    f_organ = faces.get("organ")
    f_plant = faces.get("plant_id")

    tris, organs, plants = [], [], []
    for fi, idx in enumerate(faces[key]):
        idx = list(idx)
        if len(idx) < 3:
            raise PlyError(f"face {fi} has fewer than 3 vertices")
        if min(idx) < 0 or max(idx) >= len(xyz):
            raise PlyError(f"face {fi} references a missing vertex")
        if f_organ is not None:
            org = int(f_organ[fi])
        elif v_organ is not None:
            org = int(v_organ[idx[0]])
        else:
            org = int(Organ.LEAF)
        pid = int(f_plant[fi]) if f_plant is not None else 0
        for k in range(1, len(idx) - 1):
            tris.append((idx[0], idx[k], idx[k + 1]))
            organs.append(org)
            plants.append(pid)
    if not tris:
        raise PlyError("mesh has no faces")
    organs = np.asarray(organs)
    if np.any((organs < 0) | (organs > int(Organ.GROUND))):
        raise PlyError("organ label outside {0: leaf, 1: stem, 2: ground}")
    mesh = Mesh(xyz[np.asarray(tris)], plants, organs)
    keep = mesh.areas > 1e-12
    if not keep.all():
        log.warning("%s: dropping %d degenerate faces", os.fspath(path), int((~keep).sum()))
        mesh = mesh.subset(keep)
    if not len(mesh):
        raise PlyError("mesh has no non-degenerate faces")
    return mesh


def save_ply(mesh: Mesh, path, binary: bool = True) -> None:
    """Write ``mesh`` with shared vertices plus per-face ``organ`` and ``plant_id``."""
    pts = mesh.vertices.reshape(-1, 3)
    uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
    faces = inverse.reshape(-1, 3).astype(np.int32)
    header = [
        "ply",
        "format " + ("binary_little_endian" if binary else "ascii") + " 1.0",
        "comment canopy_par mesh",
        f"element vertex {len(uniq)}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {len(faces)}",
        "property list uchar int vertex_indices",
        "property uchar organ",
        "property int plant_id",
        "end_header",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            fh.write(uniq.astype("<f8").tobytes())
            rec = np.empty(len(faces), dtype=[("n", "u1"), ("idx", "<i4", (3,)), ("organ", "u1"), ("pid", "<i4")])
            rec["n"] = 3
            rec["idx"] = faces
            rec["organ"] = mesh.organ
            rec["pid"] = mesh.plant_id
            fh.write(rec.tobytes())
        else:
            lines = [f"{x!r} {y!r} {z!r}" for x, y, z in uniq.tolist()]
            lines += [
                f"3 {a} {b} {c} {int(o)} {int(p)}"
                for (a, b, c), o, p in zip(faces.tolist(), mesh.organ, mesh.plant_id)
            ]
            fh.write(("\n".join(lines) + "\n").encode("ascii"))
