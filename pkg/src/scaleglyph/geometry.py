"""Feature-surface extraction and signed distance fields.

The feature surface is a marching-cubes triangle mesh of an isovalue of a
chosen field. Distances are exact point-to-triangle Euclidean distances
(accelerated by a centroid KD-tree with radius-bounded culling, so values
are identical to a brute-force all-triangle scan); the sign comes from the
source field side, negative where field < isovalue.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from skimage import measure

from .core import Grid3, ScalarField


class GeometryError(ValueError):
    pass


@dataclass
class TriangleMesh:
    vertices: np.ndarray   # (V, 3) float64, physical coordinates
    triangles: np.ndarray  # (T, 3) int32 vertex indices
    normals: np.ndarray    # (V, 3) float64, unit

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        if len(self.triangles) and self.triangles.max() >= len(self.vertices):
            raise GeometryError("triangle index out of range")

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    def save(self, path):
        """Binary little-endian: vertex count, vertices, normals, tri count, indices."""
        with open(path, "wb") as fp:
            fp.write(struct.pack("<I", len(self.vertices)))
            fp.write(self.vertices.astype("<f4").tobytes())
            fp.write(self.normals.astype("<f4").tobytes())
            fp.write(struct.pack("<I", len(self.triangles)))
            fp.write(self.triangles.astype("<u4").tobytes())

    @classmethod
    def load(cls, path) -> "TriangleMesh":
        with open(path, "rb") as fp:
            nv = struct.unpack("<I", fp.read(4))[0]
            verts = np.frombuffer(fp.read(12 * nv), dtype="<f4").reshape(nv, 3)
            norms = np.frombuffer(fp.read(12 * nv), dtype="<f4").reshape(nv, 3)
            nt = struct.unpack("<I", fp.read(4))[0]
            tris = np.frombuffer(fp.read(12 * nt), dtype="<u4").reshape(nt, 3)
        return cls(verts, tris.astype(np.int32), norms)


def extract_isosurface(fld: ScalarField, isovalue: float) -> TriangleMesh:
    """Marching-cubes isosurface with linear edge interpolation. Vertices in
    physical coordinates; normals follow the field gradient (increasing
    field). Out-of-range isovalues yield an empty mesh."""
    v = fld.values
    if not (v.min() < isovalue < v.max()):
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), np.int32), np.zeros((0, 3)))
    verts, faces, normals, _ = measure.marching_cubes(
        v, level=isovalue, spacing=fld.grid.spacing, gradient_direction="ascent"
    )
    verts = verts + np.asarray(fld.grid.origin)
    # drop degenerate (zero-area) triangles
    p = verts[faces]
    area2 = np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    faces = faces[area2 > 0]
    # marching_cubes returns descent-oriented vertex normals; flip so they
    # point toward increasing field value
    normals = -normals
    norm = np.linalg.norm(normals, axis=1, keepdims=True)
    norm[norm == 0] = 1.0
    return TriangleMesh(verts, faces, normals / norm)


def _point_triangle_distance(points: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Distances from points (P,3) to one triangle (3,3). Ericson's
    closest-point-on-triangle, vectorized over points."""
    a, b, c = tri[0], tri[1], tri[2]
    ab, ac = b - a, c - a
    ap = points - a
    d1 = ap @ ab
    d2 = ap @ ac
    bp = points - b
    d3 = bp @ ab
    d4 = bp @ ac
    cp = points - c
    d5 = cp @ ab
    d6 = cp @ ac

    closest = np.empty_like(points)
    done = np.zeros(len(points), dtype=bool)

    m = (d1 <= 0) & (d2 <= 0)                      # vertex a
    closest[m] = a
    done |= m
    m = ~done & (d3 >= 0) & (d4 <= d3)             # vertex b
    closest[m] = b
    done |= m
    m = ~done & (d6 >= 0) & (d5 <= d6)             # vertex c
    closest[m] = c
    done |= m

    vc = d1 * d4 - d3 * d2
    m = ~done & (vc <= 0) & (d1 >= 0) & (d3 <= 0)  # edge ab
    if m.any():
        t = d1[m] / (d1[m] - d3[m])
        closest[m] = a + t[:, None] * ab
        done |= m
    vb = d5 * d2 - d1 * d6
    m = ~done & (vb <= 0) & (d2 >= 0) & (d6 <= 0)  # edge ac
    if m.any():
        t = d2[m] / (d2[m] - d6[m])
        closest[m] = a + t[:, None] * ac
        done |= m
    va = d3 * d6 - d5 * d4
    m = ~done & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)  # edge bc
    if m.any():
        t = (d4[m] - d3[m]) / ((d4[m] - d3[m]) + (d5[m] - d6[m]))
        closest[m] = b + t[:, None] * (c - b)
        done |= m
    m = ~done                                       # face interior
    if m.any():
        denom = va[m] + vb[m] + vc[m]
        vv = vb[m] / denom
        ww = vc[m] / denom
        closest[m] = a + vv[:, None] * ab + ww[:, None] * ac
    return np.linalg.norm(points - closest, axis=1)


def mesh_distance_brute_force(points: np.ndarray, mesh: TriangleMesh) -> np.ndarray:
    """Unsigned min distance from each point to the mesh, all-triangle scan."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    tris = mesh.vertices[mesh.triangles]
    d = np.full(len(points), np.inf)
    for tri in tris:
        np.minimum(d, _point_triangle_distance(points, tri), out=d)
    return d


class MeshDistanceIndex:
    """KD-tree over triangle centroids with per-triangle bounding radii;
    query results equal the brute-force scan."""

    def __init__(self, mesh: TriangleMesh):
        if mesh.is_empty:
            raise GeometryError("cannot index an empty mesh")
        self.tris = mesh.vertices[mesh.triangles]
        self.centroids = self.tris.mean(axis=1)
        self.radii = np.linalg.norm(self.tris - self.centroids[:, None, :], axis=2).max(axis=1)
        self.max_radius = float(self.radii.max())
        self.tree = cKDTree(self.centroids)

    def query(self, points: np.ndarray, cap: float | None = None) -> np.ndarray:
        """Exact unsigned distances; entries whose lower bound exceeds ``cap``
        are returned as +inf."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        d_cent, idx = self.tree.query(points)
        upper = d_cent + self.radii[idx]  # valid upper bound on true distance
        out = np.full(len(points), np.inf)
        for i, p in enumerate(points):
            ub = upper[i]
            if cap is not None and d_cent[i] - self.max_radius > cap:
                continue
            cand = self.tree.query_ball_point(p, ub + self.max_radius + 1e-12)
            best = np.inf
            pt = p[None, :]
            for t in cand:
                # cull triangles that cannot beat the bound
                if np.linalg.norm(self.centroids[t] - p) - self.radii[t] > ub:
                    continue
                dt = _point_triangle_distance(pt, self.tris[t])[0]
                if dt < best:
                    best = dt
                    ub = min(ub, best)
            out[i] = best
        return out


@dataclass
class DistanceField:
    """Signed distance to a feature surface, sampled on a grid."""

    grid: Grid3
    values: np.ndarray  # (nx, ny, nz), physical units
    source_field: str = ""
    isovalue: float = 0.0
    max_band: float | None = None

    def save(self, path, sidecar_path=None):
        np.asarray(self.values, dtype="<f4").ravel(order="F").tofile(path)
        if sidecar_path:
            with open(sidecar_path, "w") as fp:
                json.dump({"grid": self.grid.to_dict(), "source_field": self.source_field,
                           "isovalue": self.isovalue, "max_band": self.max_band}, fp, indent=2)

    @classmethod
    def load(cls, path, sidecar_path) -> "DistanceField":
        with open(sidecar_path) as fp:
            d = json.load(fp)
        grid = Grid3.from_dict(d["grid"])
        vals = np.fromfile(path, dtype="<f4").astype(np.float64).reshape(grid.dims, order="F")
        return cls(grid, vals, d.get("source_field", ""), d.get("isovalue", 0.0), d.get("max_band"))


def signed_distance_field(mesh: TriangleMesh, fld: ScalarField, isovalue: float,
                          max_band: float | None = None) -> DistanceField:
    """Signed distance at every voxel center. |phi| is the exact mesh
    distance within max_band and saturates to max_band beyond; sign is
    negative where the source field is below the isovalue."""
    if mesh.is_empty:
        raise GeometryError("signed_distance_field requires a non-empty mesh")
    grid = fld.grid
    ii, jj, kk = np.meshgrid(*[np.arange(d) for d in grid.dims], indexing="ij")
    ijk = np.stack([ii, jj, kk], axis=-1).reshape(-1, 3)
    points = grid.voxel_center(ijk)
    index = MeshDistanceIndex(mesh)
    d = index.query(points, cap=max_band)
    if max_band is not None:
        d = np.minimum(d, max_band)
    sign = np.where(fld.values.reshape(-1) < isovalue, -1.0, 1.0)
    phi = (sign * d).reshape(grid.dims)
    return DistanceField(grid, phi, fld.name, float(isovalue), max_band)


def surface_normal(dist: DistanceField, p) -> np.ndarray:
    """Unit gradient of phi at a physical point, by trilinear interpolation
    of the central-difference gradient; points toward increasing phi.
    Raises on a degenerate (near-zero) gradient."""
    g = _trilinear_gradient(dist, p)
    n = np.linalg.norm(g)
    if n <= 1e-9:
        raise GeometryError(f"degenerate distance gradient at {tuple(np.asarray(p))}")
    return g / n


def _trilinear_gradient(dist: DistanceField, p) -> np.ndarray:
    grid = dist.grid
    gx = np.gradient(dist.values, grid.spacing[0], axis=0)
    gy = np.gradient(dist.values, grid.spacing[1], axis=1)
    gz = np.gradient(dist.values, grid.spacing[2], axis=2)
    return np.array([_trilinear(grid, gx, p), _trilinear(grid, gy, p), _trilinear(grid, gz, p)])


def _trilinear(grid: Grid3, vol: np.ndarray, p) -> float:
    q = (np.asarray(p, dtype=np.float64) - np.asarray(grid.origin)) / np.asarray(grid.spacing)
    if np.any(q < -1e-9) or np.any(q > np.asarray(grid.dims) - 1 + 1e-9):
        raise GeometryError(f"point {tuple(np.asarray(p))} outside grid")
    q = np.clip(q, 0, np.asarray(grid.dims, dtype=np.float64) - 1)
    i0 = np.minimum(q.astype(int), np.asarray(grid.dims) - 2)
    t = q - i0
    acc = 0.0
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                w = ((t[0] if dx else 1 - t[0]) * (t[1] if dy else 1 - t[1]) * (t[2] if dz else 1 - t[2]))
                acc += w * vol[i0[0] + dx, i0[1] + dy, i0[2] + dz]
    return float(acc)
