"""Isothermal embedding of Delaunay surfaces and triangle-mesh machinery.

The embedding is

    X(s, theta) = 1/2 (tau e^sigma cos theta, tau e^sigma sin theta, kappa),

whose first fundamental form is conformal: E = G = tau^2 e^{2 sigma}/4, F = 0.
Mean curvature is normalized as the average of the principal curvatures, so
the cylinder of radius 1/2 and spheres of radius 1 both have H = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .delaunay_profile import DelaunayProfile
from .errors import (
    DegenerateMetricError,
    InvalidGridError,
    NonManifoldError,
)


@dataclass(frozen=True)
class SurfacePoint:
    position: np.ndarray
    normal: np.ndarray
    s: float
    theta: float


REGION_TAGS = ("delaunay", "base", "collar")


@dataclass
class SurfaceMesh:
    """Triangle mesh with per-vertex normals and region labels.

    Faces are wound counterclockwise with respect to the outward normal, which
    for the CMC orientation used throughout (H = +1) is the opposite of
    ``vertex_normals``.
    """

    vertices: np.ndarray
    faces: np.ndarray
    vertex_normals: np.ndarray
    region_tags: list = field(default_factory=list)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        self.vertex_normals = np.asarray(self.vertex_normals,
                                         dtype=float).reshape(-1, 3)
        if not self.region_tags:
            self.region_tags = ["delaunay"] * len(self.vertices)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def validate(self):
        if len(self.vertex_normals) != len(self.vertices):
            raise InvalidGridError("normals/vertices length mismatch")
        if len(self.region_tags) != len(self.vertices):
            raise InvalidGridError("region_tags/vertices length mismatch")
        if self.faces.size and (self.faces.min() < 0
                                or self.faces.max() >= len(self.vertices)):
            raise InvalidGridError("face indices out of range")
        areas = self.face_areas()
        scale = max(np.max(np.abs(self.vertices)), 1.0)
        if self.faces.size and np.any(areas <= 1e-14 * scale * scale):
            raise InvalidGridError("degenerate (zero-area) triangle")
        _edge_face_counts(self.faces, len(self.vertices))  # manifold check

    def face_areas(self) -> np.ndarray:
        p0 = self.vertices[self.faces[:, 0]]
        p1 = self.vertices[self.faces[:, 1]]
        p2 = self.vertices[self.faces[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)

    def concatenated_with(self, other: "SurfaceMesh") -> "SurfaceMesh":
        offset = len(self.vertices)
        return SurfaceMesh(
            np.vstack([self.vertices, other.vertices]),
            np.vstack([self.faces, other.faces + offset]),
            np.vstack([self.vertex_normals, other.vertex_normals]),
            list(self.region_tags) + list(other.region_tags),
        )


# -- pointwise embedding ----------------------------------------------------

def _embed_arrays(profile: DelaunayProfile, s, theta):
    """Positions and unit normals of X at broadcast (s, theta) arrays."""
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    tau = profile.tau
    sigma, dsigma, _, kappa, _ = profile.evaluate(s)
    r = 0.5 * tau * np.exp(sigma)
    ct, st = np.cos(theta), np.sin(theta)
    pos = np.stack(np.broadcast_arrays(r * ct, r * st, 0.5 * kappa +
                                       np.zeros_like(theta)), axis=-1)
    if tau > 0:
        radial = -tau * np.cosh(sigma)
        vertical = dsigma
    else:
        radial = tau * np.sinh(sigma)
        vertical = -dsigma
    nrm = np.stack(np.broadcast_arrays(radial * ct, radial * st,
                                       vertical + np.zeros_like(theta)),
                   axis=-1)
    return pos, nrm


def embed(profile: DelaunayProfile, s: float, theta: float) -> SurfacePoint:
    """Point and unit normal of the isothermal embedding at (s, theta).

    The normal is the one used throughout the Delaunay analysis:
    (-tau cosh sigma cos theta, -tau cosh sigma sin theta, sigma') for
    unduloids, (tau sinh sigma cos theta, tau sinh sigma sin theta, -sigma')
    for nodoids.  Its unit length is a consequence of the first integral.
    """
    pos, nrm = _embed_arrays(profile, s, theta)
    return SurfacePoint(position=pos.reshape(3), normal=nrm.reshape(3),
                        s=float(s), theta=float(theta))


def fundamental_forms(profile: DelaunayProfile, s):
    """Coefficients (E, F, G, L, M, N) of the two fundamental forms at s.

    Computed from analytically differentiated embedding data (closed forms for
    sigma', sigma'', kappa').  The second form is taken with respect to the
    cross-product normal X_s x X_theta / |.|, the orientation for which every
    Delaunay surface has H = +1; for nodoids this is the negative of the
    conventional normal returned by :func:`embed`.
    """
    tau = profile.tau
    sigma, dsigma, d2sigma, _, dkappa = profile.evaluate(s)
    r = 0.5 * tau * np.exp(sigma)
    dr = r * dsigma
    d2r = r * (dsigma**2 + d2sigma)
    dz = 0.5 * dkappa
    d2z = r * tau * dsigma * np.exp(sigma)  # same closed form for both signs
    E = dr**2 + dz**2
    F = np.zeros_like(E)
    G = r**2
    norm = np.abs(r) * np.sqrt(E)  # |X_s x X_theta|
    L = (dr * d2z - dz * d2r) * r / norm
    M = np.zeros_like(E)
    Nff = r**2 * dz / norm
    return E, F, G, L, M, Nff


def mean_curvature(profile: DelaunayProfile, s):
    """Exact mean curvature H = (E N - 2 F M + G L) / (2 (E G - F^2)).

    Contract: H == 1 for every valid profile (both parameter signs); deviation
    signals profile corruption.
    """
    E, F, G, L, M, Nff = fundamental_forms(profile, s)
    den = 2.0 * (E * G - F**2)
    if np.any(np.asarray(den) < 1e-300):
        raise DegenerateMetricError("EG - F^2 vanished; profile corrupt")
    return (E * Nff - 2.0 * F * M + G * L) / den


# -- structured meshes ------------------------------------------------------

def mesh_delaunay(profile: DelaunayProfile, s_min: float, s_max: float,
                  n_s: int, n_theta: int) -> SurfaceMesh:
    """Structured triangle mesh of X over [s_min, s_max] x S^1.

    Vertices lie exactly on the embedding; the quad grid is split into
    triangles, wound counterclockwise seen from outside (opposite the stored
    CMC normals).  All vertices are tagged ``delaunay``.
    """
    if not (s_min < s_max) or n_s < 2 or n_theta < 8:
        raise InvalidGridError(
            f"need s_min < s_max, n_s >= 2, n_theta >= 8; "
            f"got ({s_min}, {s_max}, {n_s}, {n_theta})"
        )
    s = np.linspace(s_min, s_max, n_s)
    theta = np.arange(n_theta) * (2.0 * np.pi / n_theta)
    S, T = np.meshgrid(s, theta, indexing="ij")
    pos, nrm = _embed_arrays(profile, S, T)
    vertices = pos.reshape(-1, 3)
    normals = nrm.reshape(-1, 3)
    faces = _grid_faces(n_s, n_theta, wrap=True)
    # consistent outward winding: flip if the face normal aligns with the
    # stored (inward) CMC normal
    faces = _orient_outward(vertices, faces, normals)
    return SurfaceMesh(vertices, faces, normals,
                       ["delaunay"] * len(vertices))


def _grid_faces(n_rows: int, n_cols: int, wrap: bool) -> np.ndarray:
    cols = n_cols if wrap else n_cols - 1
    faces = []
    for i in range(n_rows - 1):
        for j in range(cols):
            jn = (j + 1) % n_cols
            a = i * n_cols + j
            b = (i + 1) * n_cols + j
            c = (i + 1) * n_cols + jn
            d = i * n_cols + jn
            faces.append((a, b, c))
            faces.append((a, c, d))
    return np.asarray(faces, dtype=np.int64)


def _orient_outward(vertices, faces, cmc_normals) -> np.ndarray:
    p0 = vertices[faces[:, 0]]
    fn = np.cross(vertices[faces[:, 1]] - p0, vertices[faces[:, 2]] - p0)
    ref = (cmc_normals[faces[:, 0]] + cmc_normals[faces[:, 1]]
           + cmc_normals[faces[:, 2]])
    flip = (fn * ref).sum(axis=1) > 0
    out = faces.copy()
    out[flip] = out[flip][:, [0, 2, 1]]
    return out


def icosphere(subdivisions: int = 3, radius: float = 1.0,
              center=(0.0, 0.0, 0.0), tag: str = "base") -> SurfaceMesh:
    """Icosphere with CMC orientation: vertex normals point into the ball.

    With inward normals a sphere of radius 1 has mean curvature +1 under the
    averaged convention, matching the Delaunay normalization.
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [[-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
         [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
         [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1]], dtype=float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]],
        dtype=np.int64)
    for _ in range(subdivisions):
        verts_list = list(verts)
        midpoint = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in midpoint:
                m = verts_list[a] + verts_list[b]
                midpoint[key] = len(verts_list)
                verts_list.append(m / np.linalg.norm(m))
            return midpoint[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.asarray(verts_list)
        faces = np.asarray(new_faces, dtype=np.int64)
    center = np.asarray(center, dtype=float)
    positions = center + radius * verts
    normals = -verts  # inward
    return SurfaceMesh(positions, faces, normals, [tag] * len(positions))


# -- discrete mean curvature -------------------------------------------------

@dataclass(frozen=True)
class DiscreteCurvature:
    """Per-vertex discrete mean curvature with a boundary-reliability mask."""

    values: np.ndarray
    is_boundary: np.ndarray

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[~self.is_boundary]


def _edge_face_counts(faces: np.ndarray, n_vertices: int):
    """Sorted-edge incidence counts; raises on edges shared by > 2 faces."""
    if faces.size == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]],
                            faces[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise NonManifoldError(
            f"{int(np.sum(counts > 2))} edges shared by more than two faces"
        )
    return uniq, counts


def discrete_mean_curvature(mesh: SurfaceMesh) -> DiscreteCurvature:
    """Cotangent-Laplacian mean curvature with mixed Voronoi areas.

    The magnitude of the mean-curvature normal K_i = sum_j (cot a_ij +
    cot b_ij)(x_i - x_j) / (2 A_i) equals 2 H; the sign is taken against the
    stored vertex normal so that the CMC orientation reads H = +1.  Boundary
    vertices (edges with a single incident face) are flagged unreliable.
    """
    verts = mesh.vertices
    faces = mesh.faces
    n = len(verts)
    edges, counts = _edge_face_counts(faces, n)
    is_boundary = np.zeros(n, dtype=bool)
    if len(edges):
        boundary_edges = edges[counts == 1]
        is_boundary[boundary_edges.ravel()] = True

    i0, i1, i2 = faces[:, 0], faces[:, 1], faces[:, 2]
    p0, p1, p2 = verts[i0], verts[i1], verts[i2]

    def cot_at(a, b, c):
        # cotangent of the angle at a, between edges (b - a) and (c - a)
        u, v = b - a, c - a
        cross = np.linalg.norm(np.cross(u, v), axis=1)
        return (u * v).sum(axis=1) / np.maximum(cross, 1e-300)

    cot0 = cot_at(p0, p1, p2)
    cot1 = cot_at(p1, p2, p0)
    cot2 = cot_at(p2, p0, p1)
    area = 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)

    # mixed Voronoi areas (obtuse triangles fall back to area/2 at the obtuse
    # corner, area/4 at the others)
    l0 = ((p2 - p1) ** 2).sum(axis=1)
    l1 = ((p0 - p2) ** 2).sum(axis=1)
    l2 = ((p1 - p0) ** 2).sum(axis=1)
    vor0 = (l1 * cot1 + l2 * cot2) / 8.0
    vor1 = (l2 * cot2 + l0 * cot0) / 8.0
    vor2 = (l0 * cot0 + l1 * cot1) / 8.0
    ob0, ob1, ob2 = cot0 < 0, cot1 < 0, cot2 < 0
    any_ob = ob0 | ob1 | ob2
    w0 = np.where(any_ob, np.where(ob0, area / 2, area / 4), vor0)
    w1 = np.where(any_ob, np.where(ob1, area / 2, area / 4), vor1)
    w2 = np.where(any_ob, np.where(ob2, area / 2, area / 4), vor2)
    areas = np.zeros(n)
    np.add.at(areas, i0, w0)
    np.add.at(areas, i1, w1)
    np.add.at(areas, i2, w2)

    K = np.zeros((n, 3))
    for a, b, cot in ((i1, i2, cot0), (i2, i0, cot1), (i0, i1, cot2)):
        d = verts[a] - verts[b]
        np.add.at(K, a, cot[:, None] * d)
        np.add.at(K, b, -cot[:, None] * d)
    K /= 2.0 * np.maximum(areas, 1e-300)[:, None]

    values = -0.5 * (K * mesh.vertex_normals).sum(axis=1)
    return DiscreteCurvature(values=values, is_boundary=is_boundary)
