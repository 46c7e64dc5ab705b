"""ASCII OBJ and PLY 1.0 writers with matching reference loaders."""

from __future__ import annotations

import numpy as np

from .embedding import SurfaceMesh
from .errors import IOFailureError


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_mesh(mesh: SurfaceMesh, fmt: str) -> bytes:
    """Serialize a mesh as ASCII OBJ (v/vn/f, 1-based) or ASCII PLY 1.0."""
    if fmt == "obj":
        return _export_obj(mesh)
    if fmt == "ply":
        return _export_ply(mesh)
    raise IOFailureError(f"unknown mesh format {fmt!r} (want obj or ply)")


def _export_obj(mesh: SurfaceMesh) -> bytes:
    lines = ["# delaunaycmc mesh"]
    for v in mesh.vertices:
        lines.append("v " + " ".join(_fmt(x) for x in v))
    for n in mesh.vertex_normals:
        lines.append("vn " + " ".join(_fmt(x) for x in n))
    for f in mesh.faces:
        a, b, c = (int(i) + 1 for i in f)
        lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
    return ("\n".join(lines) + "\n").encode("ascii")


def _export_ply(mesh: SurfaceMesh) -> bytes:
    header = [
        "ply",
        "format ascii 1.0",
        "comment delaunaycmc mesh",
        f"element vertex {mesh.n_vertices}",
        "property float x",
        "property float y",
        "property float z",
        "property float nx",
        "property float ny",
        "property float nz",
        f"element face {mesh.n_faces}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    lines = list(header)
    for v, n in zip(mesh.vertices, mesh.vertex_normals):
        lines.append(" ".join(_fmt(x) for x in (*v, *n)))
    for f in mesh.faces:
        lines.append("3 " + " ".join(str(int(i)) for i in f))
    return ("\n".join(lines) + "\n").encode("ascii")


def load_obj(data: bytes) -> SurfaceMesh:
    """Parse the OBJ subset written by :func:`export_mesh`."""
    verts, normals, faces = [], [], []
    for raw in data.decode("ascii").splitlines():
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "vn":
            normals.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) - 1 for p in parts[1:4]]
            faces.append(idx)
    if not verts:
        raise IOFailureError("OBJ contained no vertices")
    if not normals:
        normals = [[0.0, 0.0, 1.0]] * len(verts)
    return SurfaceMesh(np.asarray(verts), np.asarray(faces, dtype=np.int64),
                       np.asarray(normals), ["base"] * len(verts))


def load_ply(data: bytes) -> SurfaceMesh:
    """Parse the ASCII PLY subset written by :func:`export_mesh`."""
    lines = data.decode("ascii").splitlines()
    if not lines or lines[0].strip() != "ply":
        raise IOFailureError("not a PLY file")
    n_vertex = n_face = None
    body_at = None
    for i, line in enumerate(lines[1:], start=1):
        parts = line.split()
        if parts[:2] == ["element", "vertex"]:
            n_vertex = int(parts[2])
        elif parts[:2] == ["element", "face"]:
            n_face = int(parts[2])
        elif parts[:1] == ["end_header"]:
            body_at = i + 1
            break
    if body_at is None or n_vertex is None or n_face is None:
        raise IOFailureError("malformed PLY header")
    rows = lines[body_at:]
    if len(rows) < n_vertex + n_face:
        raise IOFailureError("truncated PLY body")
    vdata = np.array([[float(x) for x in rows[i].split()]
                      for i in range(n_vertex)])
    faces = []
    for i in range(n_vertex, n_vertex + n_face):
        parts = [int(x) for x in rows[i].split()]
        if parts[0] != 3:
            raise IOFailureError("only triangle faces are supported")
        faces.append(parts[1:4])
    return SurfaceMesh(vdata[:, 0:3], np.asarray(faces, dtype=np.int64),
                       vdata[:, 3:6], ["base"] * n_vertex)
