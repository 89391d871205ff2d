"""Level-set-restricted centroidal Voronoi tessellation.

Signed-distance bands around the feature surface are split into
6-connected components; each component is seeded with sites proportional
to its voxel count and relaxed by restricted Lloyd iterations (assignment
to the Euclidean-nearest site within the component, sites snapped to their
region's nearest voxel). Fully deterministic for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import DistanceField, GeometryError, surface_normal

UNLABELED = -1


class TessellationError(ValueError):
    pass


@dataclass(frozen=True)
class BandSpec:
    """Band isovalues plus site-density and Lloyd-relaxation parameters."""

    isovalues: tuple[float, ...]
    density: float = 0.015
    seed: int = 0
    max_iters: int = 50
    move_tolerance: float = 0.5  # voxels

    def __post_init__(self):
        iso = tuple(float(c) for c in self.isovalues)
        object.__setattr__(self, "isovalues", iso)
        if len(iso) < 2 or list(iso) != sorted(set(iso)):
            raise TessellationError(f"isovalues must be strictly increasing, got {iso}")
        if not (0 < self.density <= 1):
            raise TessellationError(f"density must be in (0, 1], got {self.density}")

    def to_dict(self) -> dict:
        return {"isovalues": list(self.isovalues), "density": self.density, "seed": self.seed,
                "max_iters": self.max_iters, "move_tolerance": self.move_tolerance}

    @classmethod
    def from_dict(cls, d) -> "BandSpec":
        return cls(tuple(d["isovalues"]), d.get("density", 0.015), d.get("seed", 0),
                   d.get("max_iters", 50), d.get("move_tolerance", 0.5))


def form_bands(dist: DistanceField, isovalues) -> np.ndarray:
    """Band index per voxel: band i iff c_i <= phi < c_{i+1}; -1 outside."""
    iso = list(isovalues)
    phi = dist.values
    labels = np.full(phi.shape, UNLABELED, dtype=np.int32)
    for i in range(len(iso) - 1):
        labels[(phi >= iso[i]) & (phi < iso[i + 1])] = i
    return labels


_SIX = ndimage.generate_binary_structure(3, 1)


def connected_components(band_labels: np.ndarray) -> np.ndarray:
    """6-connected components within each band; globally unique ids, -1 outside."""
    out = np.full(band_labels.shape, UNLABELED, dtype=np.int32)
    next_id = 0
    for band in np.unique(band_labels):
        if band == UNLABELED:
            continue
        lab, n = ndimage.label(band_labels == band, structure=_SIX)
        mask = lab > 0
        out[mask] = lab[mask] - 1 + next_id
        next_id += n
    return out


def _seed_indices(n: int, density: float, rng: np.random.Generator) -> np.ndarray:
    count = min(n, max(1, int(np.floor(density * n + 0.5))))
    return np.sort(rng.choice(n, size=count, replace=False))


def seed_sites(component_voxels: np.ndarray, density: float, seed) -> np.ndarray:
    """Pick max(1, round(density * n)) distinct seed voxels, uniformly.
    ``seed`` may be an integer or a Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return component_voxels[_seed_indices(len(component_voxels), density, rng)]


@dataclass
class RegionRecord:
    id: int
    site: tuple[float, float, float]       # physical coordinates
    site_voxel: tuple[int, int, int]
    band: int
    component: int
    voxel_count: int
    normal: tuple[float, float, float]
    centroid_drift: float = 0.0            # last-iteration site move, voxels

    def to_dict(self) -> dict:
        return {"id": self.id, "site": list(self.site), "site_voxel": list(self.site_voxel),
                "band": self.band, "component": self.component, "voxel_count": self.voxel_count,
                "normal": list(self.normal), "centroid_drift": self.centroid_drift}


@dataclass
class Tessellation:
    grid_dims: tuple[int, int, int]
    band_label: np.ndarray       # (nx, ny, nz) int32, -1 outside
    component_label: np.ndarray  # (nx, ny, nz) int32, -1 outside
    region_label: np.ndarray     # (nx, ny, nz) int32, -1 outside
    regions: list[RegionRecord] = field(default_factory=list)
    spec: BandSpec | None = None

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def save(self, label_path, table_path):
        self.region_label.astype("<i4").ravel(order="F").tofile(label_path)
        doc = {
            "grid_dims": list(self.grid_dims),
            "spec": self.spec.to_dict() if self.spec else None,
            "regions": [r.to_dict() for r in self.regions],
        }
        with open(table_path, "w") as fp:
            json.dump(doc, fp, indent=2)

    @classmethod
    def load(cls, label_path, table_path) -> "Tessellation":
        with open(table_path) as fp:
            doc = json.load(fp)
        dims = tuple(doc["grid_dims"])
        region = np.fromfile(label_path, dtype="<i4").reshape(dims, order="F")
        regions = [RegionRecord(d["id"], tuple(d["site"]), tuple(d["site_voxel"]), d["band"],
                                d["component"], d["voxel_count"], tuple(d["normal"]),
                                d.get("centroid_drift", 0.0)) for d in doc["regions"]]
        spec = BandSpec.from_dict(doc["spec"]) if doc.get("spec") else None
        band = np.full(dims, UNLABELED, np.int32)
        comp = np.full(dims, UNLABELED, np.int32)
        for r in regions:
            band[region == r.id] = r.band
            comp[region == r.id] = r.component
        return cls(dims, band, comp, region, regions, spec)


class _ComponentLloyd:
    """Lloyd relaxation restricted to one connected component.

    Coordinates are physical voxel centers; assignment ties go to the
    lowest site id; sites snap to the nearest voxel of their own region.
    """

    def __init__(self, coords: np.ndarray, sites_idx: np.ndarray):
        self.coords = coords            # (n, 3) physical voxel centers
        self.site_pos = coords[sites_idx].copy()
        self.assign = np.zeros(len(coords), dtype=np.int64)

    def assign_step(self):
        d2 = ((self.coords[:, None, :] - self.site_pos[None, :, :]) ** 2).sum(axis=2)
        self.assign = np.argmin(d2, axis=1)  # argmin takes the lowest index on ties

    def energy(self) -> float:
        diff = self.coords - self.site_pos[self.assign]
        return float((diff**2).sum())

    def update_step(self) -> tuple[float, bool]:
        """Move sites to snapped region centroids; returns (max move, reseeded)."""
        k = len(self.site_pos)
        counts = np.bincount(self.assign, minlength=k)
        reseeded = False
        new_pos = self.site_pos.copy()
        for s in range(k):
            members = np.flatnonzero(self.assign == s)
            if len(members) == 0:
                # re-seed at the voxel farthest from any current site
                d2 = ((self.coords[:, None, :] - self.site_pos[None, :, :]) ** 2).sum(axis=2)
                far = int(np.argmax(d2.min(axis=1)))
                new_pos[s] = self.coords[far]
                reseeded = True
                continue
            centroid = self.coords[members].mean(axis=0)
            snap = members[int(np.argmin(((self.coords[members] - centroid) ** 2).sum(axis=1)))]
            new_pos[s] = self.coords[snap]
        moves = np.linalg.norm(new_pos - self.site_pos, axis=1)
        self.site_pos = new_pos
        return float(moves.max()) if k else 0.0, reseeded


def tessellate(dist: DistanceField, spec: BandSpec,
               energy_log: list | None = None) -> Tessellation:
    """Run the full band -> component -> seeded Lloyd pipeline."""
    grid = dist.grid
    band = form_bands(dist, spec.isovalues)
    comp = connected_components(band)
    region = np.full(grid.dims, UNLABELED, dtype=np.int32)
    regions: list[RegionRecord] = []
    rng = np.random.default_rng(spec.seed)
    min_spacing = min(grid.spacing)

    comp_ids = [c for c in np.unique(comp) if c != UNLABELED]
    next_region = 0
    for cid in comp_ids:
        mask = comp == cid
        vox = np.argwhere(mask)  # sorted lexicographically by construction
        coords = grid.voxel_center(vox)
        seed_idx = _seed_indices(len(vox), spec.density, rng)
        lloyd = _ComponentLloyd(coords, seed_idx)
        lloyd.assign_step()
        prev_energy = np.inf
        drift = 0.0
        for _ in range(spec.max_iters):
            move, reseeded = lloyd.update_step()
            lloyd.assign_step()
            e = lloyd.energy()
            if energy_log is not None:
                energy_log.append((int(cid), e, reseeded))
            prev_energy = e
            drift = move / min_spacing
            if drift < spec.move_tolerance and not reseeded:
                break
        band_id = int(band[tuple(vox[0])])
        k = len(lloyd.site_pos)
        site_voxels = np.rint((lloyd.site_pos - np.asarray(grid.origin)) / np.asarray(grid.spacing)).astype(int)
        for s in range(k):
            members = np.flatnonzero(lloyd.assign == s)
            if len(members) == 0:
                # re-seed collision at max_iters can leave an empty region;
                # drop it rather than emit a zero-voxel record
                continue
            rid = next_region
            next_region += 1
            region[tuple(vox[members].T)] = rid
            n = np.zeros(3)
            try:
                n = surface_normal(dist, lloyd.site_pos[s])
            except GeometryError:
                # fallback: mean gradient direction over the region
                g = np.zeros(3)
                for m in members:
                    try:
                        g += surface_normal(dist, coords[m])
                    except GeometryError:
                        pass
                norm = np.linalg.norm(g)
                n = g / norm if norm > 0 else np.array([0.0, 0.0, 1.0])
            regions.append(RegionRecord(
                id=rid,
                site=tuple(float(v) for v in lloyd.site_pos[s]),
                site_voxel=tuple(int(v) for v in site_voxels[s]),
                band=band_id,
                component=int(cid),
                voxel_count=int(len(members)),
                normal=tuple(float(v) for v in n),
                centroid_drift=float(drift),
            ))
    return Tessellation(grid.dims, band, comp, region, regions, spec)
