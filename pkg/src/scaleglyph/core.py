"""Volume grids, raw field I/O, and spectral-preprocessing primitives.

Fields live on regular 3D grids and are stored on disk as headerless raw
arrays of 32-bit little-endian floats in x-fastest order. All operations
here are pure: they return new fields and never mutate their inputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

AXES = {"x": 0, "y": 1, "z": 2}

RAW_DTYPE = np.dtype("<f4")


class VolumeError(ValueError):
    """Raised for malformed manifests, fields, or layouts."""


def _as_triple(v, name):
    t = tuple(v)
    if len(t) != 3:
        raise VolumeError(f"{name} must have 3 components, got {v!r}")
    return t


@dataclass(frozen=True)
class Grid3:
    """Regular grid: voxel counts, physical spacing, and physical origin."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in _as_triple(self.dims, "dims")))
        object.__setattr__(self, "spacing", tuple(float(s) for s in _as_triple(self.spacing, "spacing")))
        object.__setattr__(self, "origin", tuple(float(o) for o in _as_triple(self.origin, "origin")))
        if any(d < 2 for d in self.dims):
            raise VolumeError(f"all dims must be >= 2, got {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise VolumeError(f"all spacing components must be > 0, got {self.spacing}")

    @property
    def voxel_count(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def lengths(self) -> tuple[float, float, float]:
        """Physical side length per axis, L = N * dx."""
        return tuple(d * s for d, s in zip(self.dims, self.spacing))

    def voxel_center(self, ijk) -> np.ndarray:
        """Physical coordinates of voxel center(s); ijk is (..., 3)."""
        ijk = np.asarray(ijk, dtype=np.float64)
        return np.asarray(self.origin) + ijk * np.asarray(self.spacing)

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "spacing": list(self.spacing), "origin": list(self.origin)}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid3":
        return cls(tuple(d["dims"]), tuple(d.get("spacing", (1, 1, 1))), tuple(d.get("origin", (0, 0, 0))))


@dataclass
class ScalarField:
    """A named scalar volume. ``values`` is an (nx, ny, nz) array."""

    grid: Grid3
    name: str
    values: np.ndarray
    units: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.dims:
            if self.values.size == self.grid.voxel_count:
                # flat x-fastest input
                self.values = self.values.reshape(self.grid.dims, order="F")
            else:
                raise VolumeError(
                    f"field '{self.name}': {self.values.size} samples, grid needs {self.grid.voxel_count}"
                )

    def validate_finite(self):
        bad = ~np.isfinite(self.values)
        if bad.any():
            idx = int(np.argmax(bad.ravel(order="F")))
            raise VolumeError(f"field '{self.name}': non-finite sample at flat index {idx}")

    def with_values(self, values, name=None, grid=None) -> "ScalarField":
        return ScalarField(grid or self.grid, name or self.name, values, self.units)

    def save_raw(self, path):
        np.asarray(self.values, dtype=RAW_DTYPE).ravel(order="F").tofile(path)


def load_raw(path, grid: Grid3, name: str = "", units: str = "", encoding: str = "float32-le") -> ScalarField:
    """Read a headerless raw volume, checking size and finiteness."""
    if encoding not in ("float32-le", "float32"):
        raise VolumeError(f"unsupported scalar encoding {encoding!r}")
    data = np.fromfile(path, dtype=RAW_DTYPE)
    if data.size != grid.voxel_count:
        raise VolumeError(
            f"file {path}: {data.size} samples, expected {grid.voxel_count} for dims {grid.dims}"
        )
    f = ScalarField(grid, name, data.astype(np.float64).reshape(grid.dims, order="F"), units)
    f.validate_finite()
    return f


@dataclass
class VolumeManifest:
    """Catalog of raw field files sharing one grid."""

    grid: Grid3
    fields: list[dict]  # each: {name, units, path, encoding}
    provenance: dict = field(default_factory=dict)
    base_dir: str = "."

    def field_entry(self, name: str) -> dict:
        for e in self.fields:
            if e["name"] == name:
                return e
        raise VolumeError(f"unknown field {name!r}; manifest has {[e['name'] for e in self.fields]}")

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "fields": [dict(e) for e in self.fields],
            "provenance": dict(self.provenance),
        }

    def save(self, path):
        with open(path, "w") as fp:
            json.dump(self.to_dict(), fp, indent=2)

    @classmethod
    def load(cls, path) -> "VolumeManifest":
        with open(path) as fp:
            d = json.load(fp)
        return cls(
            grid=Grid3.from_dict(d["grid"]),
            fields=list(d["fields"]),
            provenance=d.get("provenance", {}),
            base_dir=os.path.dirname(os.path.abspath(path)),
        )


def load_field(manifest: VolumeManifest, name: str) -> ScalarField:
    """Load one manifest field as a ScalarField."""
    e = manifest.field_entry(name)
    path = e["path"]
    if not os.path.isabs(path):
        path = os.path.join(manifest.base_dir, path)
    return load_raw(path, manifest.grid, name=e["name"], units=e.get("units", ""),
                    encoding=e.get("encoding", "float32-le"))


def downsample(fld: ScalarField, factor: int) -> ScalarField:
    """Box-average by an integer factor per axis; trailing remainder voxels
    that do not fill a block are truncated."""
    if factor < 1:
        raise VolumeError(f"downsample factor must be >= 1, got {factor}")
    if factor == 1:
        return fld.with_values(fld.values.copy())
    v = fld.values
    new_dims = tuple(d // factor for d in v.shape)
    if any(d < 2 for d in new_dims):
        raise VolumeError(f"factor {factor} too large for dims {v.shape}")
    v = v[: new_dims[0] * factor, : new_dims[1] * factor, : new_dims[2] * factor]
    v = v.reshape(new_dims[0], factor, new_dims[1], factor, new_dims[2], factor)
    out = v.mean(axis=(1, 3, 5))
    grid = Grid3(new_dims, tuple(s * factor for s in fld.grid.spacing), fld.grid.origin)
    return fld.with_values(out, grid=grid)


def mirror_extend(fld: ScalarField) -> ScalarField:
    """Whole-sample reflection doubling each dimension ([a,b,c] -> [a,b,c,c,b,a]),
    making the field continuous under periodic wrap."""
    v = fld.values
    for ax in range(3):
        v = np.concatenate([v, np.flip(v, axis=ax)], axis=ax)
    grid = Grid3(tuple(2 * d for d in fld.grid.dims), fld.grid.spacing, fld.grid.origin)
    return fld.with_values(v, grid=grid)


def crop(fld: ScalarField, extent) -> ScalarField:
    """Crop to a half-open per-axis extent ((x0,x1),(y0,y1),(z0,z1))."""
    (x0, x1), (y0, y1), (z0, z1) = extent
    v = fld.values[x0:x1, y0:y1, z0:z1]
    origin = tuple(o + s * lo for o, s, lo in zip(fld.grid.origin, fld.grid.spacing, (x0, y0, z0)))
    grid = Grid3(v.shape, fld.grid.spacing, origin)
    return fld.with_values(v.copy(), grid=grid)


def _tukey_1d(n: int, width: int) -> np.ndarray:
    """1 on the interior plateau, raised-cosine over the taper band, 0 at the
    outermost sample."""
    if width == 0:
        return np.ones(n)
    if 2 * width > n:
        raise VolumeError(f"taper width {width} too wide for dim {n}")
    w = np.ones(n)
    t = np.arange(width, dtype=np.float64)
    ramp = 0.5 * (1.0 - np.cos(np.pi * t / width))
    w[:width] = ramp
    w[n - width:] = ramp[::-1]
    return w


def tukey_taper(fld: ScalarField, taper_width) -> ScalarField:
    """Multiply by a separable Tukey window with the given per-axis width."""
    tw = _per_axis(taper_width)
    wx = _tukey_1d(fld.grid.dims[0], tw[0])
    wy = _tukey_1d(fld.grid.dims[1], tw[1])
    wz = _tukey_1d(fld.grid.dims[2], tw[2])
    out = fld.values * wx[:, None, None] * wy[None, :, None] * wz[None, None, :]
    return fld.with_values(out)


def _per_axis(v) -> tuple[int, int, int]:
    if np.isscalar(v):
        return (int(v),) * 3
    return tuple(int(x) for x in _as_triple(v, "per-axis value"))


@dataclass(frozen=True)
class BlockLayout:
    """Overlapping-block tiling. Each block spans ``block_dims`` voxels;
    adjacent blocks share a 2*overlap ghost margin, and ownership splits at
    the midpoint of each shared margin so every voxel is owned exactly once."""

    block_dims: tuple[int, int, int]
    overlap: tuple[int, int, int] = (0, 0, 0)
    taper_width: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        object.__setattr__(self, "block_dims", _per_axis(self.block_dims))
        object.__setattr__(self, "overlap", _per_axis(self.overlap))
        object.__setattr__(self, "taper_width", _per_axis(self.taper_width))
        for bd, ov, tw in zip(self.block_dims, self.overlap, self.taper_width):
            if bd < 2 * ov + 2:
                raise VolumeError(f"block dim {bd} must be >= 2*overlap+2 = {2 * ov + 2}")
            if tw > ov:
                raise VolumeError(f"taper width {tw} exceeds overlap {ov}")

    def axis_spans(self, dim: int, axis: int):
        """Per-axis (block start, block stop, owned start, owned stop) tuples."""
        bd, ov = self.block_dims[axis], self.overlap[axis]
        if bd >= dim:
            return [(0, dim, 0, dim)]
        advance = bd - 2 * ov
        n = 1 + -(-(dim - bd) // advance)  # ceil
        starts = [min(k * advance, dim - bd) for k in range(n)]
        spans = []
        for k, s in enumerate(starts):
            own0 = 0 if k == 0 else (starts[k - 1] + bd + starts[k]) // 2
            own1 = dim if k == n - 1 else (s + bd + starts[k + 1]) // 2
            spans.append((s, s + bd, own0, own1))
        return spans


def split_blocks(fld: ScalarField, layout: BlockLayout):
    """Split into overlapping blocks; yields (block field, owned extent).

    The owned extent is in whole-field voxel indices, half-open per axis.
    """
    out = []
    sx = layout.axis_spans(fld.grid.dims[0], 0)
    sy = layout.axis_spans(fld.grid.dims[1], 1)
    sz = layout.axis_spans(fld.grid.dims[2], 2)
    for (x0, x1, ox0, ox1) in sx:
        for (y0, y1, oy0, oy1) in sy:
            for (z0, z1, oz0, oz1) in sz:
                blk = crop(fld, ((x0, x1), (y0, y1), (z0, z1)))
                # owned extent relative to the whole field, plus block offset
                out.append((blk, ((ox0, ox1), (oy0, oy1), (oz0, oz1)), (x0, y0, z0)))
    return out


def composite_blocks(blocks, grid: Grid3, name: str = "", units: str = "") -> ScalarField:
    """Reassemble a field from (block, owned extent, offset) triples,
    keeping only each block's owned interior."""
    out = np.full(grid.dims, np.nan)
    for blk, extent, offset in blocks:
        (x0, x1), (y0, y1), (z0, z1) = extent
        bx, by, bz = offset
        out[x0:x1, y0:y1, z0:z1] = blk.values[x0 - bx:x1 - bx, y0 - by:y1 - by, z0 - bz:z1 - bz]
    if np.isnan(out).any():
        raise VolumeError("composite_blocks: owned extents do not cover the grid (missing block?)")
    return ScalarField(grid, name, out, units)


def gradient_component(fld: ScalarField, axis) -> ScalarField:
    """Partial derivative along one axis: central differences on the
    interior, one-sided at the boundary slabs."""
    ax = AXES[axis] if isinstance(axis, str) else int(axis)
    if fld.grid.dims[ax] < 3:
        raise VolumeError(f"axis {axis}: dim {fld.grid.dims[ax]} too small for gradients")
    g = np.gradient(fld.values, fld.grid.spacing[ax], axis=ax)
    return fld.with_values(g, name=f"d({fld.name})/d{'xyz'[ax]}")
