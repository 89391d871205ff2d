"""Per-region aggregation of band-field spectral energy, and derived
dissipation-rate component fields.

For each region, field, and scale bin, the aggregate is

    (1 / (n * span)) * sum over region voxels of |band|^2   (squared mode)

or the unsquared |band| in norm mode, where n is the region voxel count
and span is the bin's length-scale extent L/2^j_min - L/2^(j_max+1).
Accumulation is in double precision, summed in voxel order, so results are
reproducible bit-for-bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .core import ScalarField, VolumeManifest, gradient_component, load_field
from .lsrcvt import Tessellation
from .specfilter import BandDecomposition

MODES = ("squared", "norm")


class StatsError(ValueError):
    pass


@dataclass
class RegionStats:
    """(R, M, N) table of per-region, per-field, per-bin aggregates."""

    values: np.ndarray          # (R, M, N) float64
    field_names: list[str]
    mode: str
    bin_edges: list[int]
    bin_spans: list[float]      # length-scale span per bin
    include_j0: bool = True
    units: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise StatsError("values must be (regions, fields, bins)")
        if self.values.shape[1] != len(self.field_names):
            raise StatsError("field_names length mismatch")
        if self.values.shape[2] != len(self.bin_spans):
            raise StatsError("bin_spans length mismatch")
        if self.mode not in MODES:
            raise StatsError(f"mode must be one of {MODES}")

    @property
    def n_regions(self) -> int:
        return self.values.shape[0]

    @property
    def n_fields(self) -> int:
        return self.values.shape[1]

    @property
    def n_bins(self) -> int:
        return self.values.shape[2]

    def field_index(self, name: str) -> int:
        try:
            return self.field_names.index(name)
        except ValueError:
            raise StatsError(f"unknown field {name!r}") from None

    def merge(self, other: "RegionStats") -> "RegionStats":
        """Concatenate along the field axis (same regions and bins)."""
        if other.n_regions != self.n_regions or other.bin_spans != self.bin_spans:
            raise StatsError("incompatible stats tables")
        if other.mode != self.mode:
            raise StatsError("cannot merge different modes")
        return RegionStats(
            np.concatenate([self.values, other.values], axis=1),
            self.field_names + other.field_names, self.mode,
            self.bin_edges, self.bin_spans, self.include_j0,
            {**self.units, **other.units},
        )

    def save(self, path, sidecar_path=None):
        """Binary: header (R, M, N, mode, bin edges, spans), then R*M*N f32
        in region-major, field, bin order."""
        with open(path, "wb") as fp:
            fp.write(b"RGST\x01")
            fp.write(struct.pack("<III", *self.values.shape))
            fp.write(struct.pack("<B", MODES.index(self.mode)))
            fp.write(struct.pack("<I", len(self.bin_edges)))
            fp.write(np.asarray(self.bin_edges, "<i4").tobytes())
            fp.write(np.asarray(self.bin_spans, "<f8").tobytes())
            fp.write(self.values.astype("<f4").tobytes())  # C order = region, field, bin
        if sidecar_path:
            with open(sidecar_path, "w") as fp:
                json.dump({"field_names": self.field_names, "units": self.units,
                           "mode": self.mode, "bin_edges": list(self.bin_edges),
                           "bin_spans": list(self.bin_spans),
                           "include_j0": self.include_j0}, fp, indent=2)

    @classmethod
    def load(cls, path, sidecar_path) -> "RegionStats":
        with open(sidecar_path) as fp:
            meta = json.load(fp)
        with open(path, "rb") as fp:
            magic = fp.read(5)
            if magic != b"RGST\x01":
                raise StatsError(f"bad stats file magic {magic!r}")
            r, m, n = struct.unpack("<III", fp.read(12))
            fp.read(1)
            (ne,) = struct.unpack("<I", fp.read(4))
            fp.read(4 * ne + 8 * n)
            vals = np.frombuffer(fp.read(4 * r * m * n), dtype="<f4").reshape(r, m, n)
        return cls(vals.astype(np.float64), meta["field_names"], meta["mode"],
                   meta["bin_edges"], meta["bin_spans"], meta.get("include_j0", True),
                   meta.get("units", {}))


def aggregate_energy(decomp: BandDecomposition, tess: Tessellation, mode: str = "squared") -> RegionStats:
    """Aggregate one field's band decomposition over all tessellation regions."""
    if mode not in MODES:
        raise StatsError(f"mode must be one of {MODES}")
    if decomp.grid.dims != tuple(tess.grid_dims):
        raise StatsError(f"grid mismatch: bands {decomp.grid.dims} vs labels {tess.grid_dims}")
    R = tess.n_regions
    spans = decomp.bin_length_spans()
    labels = tess.region_label.ravel(order="F")
    inside = labels >= 0
    lab_in = labels[inside]
    counts = np.array([r.voxel_count for r in tess.regions], dtype=np.float64)
    out = np.zeros((R, 1, decomp.n_bins))
    for k, b in enumerate(decomp.bands):
        x = b.values.ravel(order="F")[inside].astype(np.float64)
        x = x * x if mode == "squared" else np.abs(x)
        sums = np.bincount(lab_in, weights=x, minlength=R)
        out[:, 0, k] = sums / (counts * spans[k])
    spec = decomp.spec
    return RegionStats(out, [decomp.source_name], mode, list(spec.bin_edges), spans, spec.include_j0)


@dataclass(frozen=True)
class DerivedFieldRecipe:
    """Recipe for a derived input field.

    kind 'dissipation_component' produces mu * (d u_i' / d x_j)^2 / 2 for
    one (i, j) pair; 'passthrough' copies an existing field.
    """

    output_name: str
    kind: str                      # dissipation_component | passthrough
    inputs: tuple[str, ...]        # velocity-fluctuation field names (u_x', u_y', u_z') or source
    component: tuple[str, str] | None = None  # (i, j) axes for dissipation
    viscosity: float = 1.0

    def __post_init__(self):
        if self.kind not in ("dissipation_component", "passthrough"):
            raise StatsError(f"unknown recipe kind {self.kind!r}")
        if self.kind == "dissipation_component" and self.component is None:
            raise StatsError("dissipation_component needs a (i, j) component")


_AXIS_ORDER = ("x", "y", "z")


def build_derived_fields(recipes, manifest: VolumeManifest) -> list[ScalarField]:
    """Materialize derived fields from manifest inputs."""
    cache: dict[str, ScalarField] = {}

    def get(name):
        if name not in cache:
            cache[name] = load_field(manifest, name)
        return cache[name]

    out = []
    for r in recipes:
        if r.kind == "passthrough":
            f = get(r.inputs[0])
            out.append(f.with_values(f.values.copy(), name=r.output_name))
            continue
        i_ax, j_ax = r.component
        u = get(r.inputs[_AXIS_ORDER.index(i_ax)])
        g = gradient_component(u, j_ax)
        vals = r.viscosity * g.values.astype(np.float64) ** 2 / 2.0
        out.append(ScalarField(u.grid, r.output_name, vals, u.units))
    return out


def dissipation_recipes(velocity_fields, viscosity: float, prefix: str = "eps") -> list[DerivedFieldRecipe]:
    """All nine dissipation-rate component recipes for (u_x', u_y', u_z')."""
    recipes = []
    for i in _AXIS_ORDER:
        for j in _AXIS_ORDER:
            recipes.append(DerivedFieldRecipe(
                output_name=f"{prefix}_{i}{j}", kind="dissipation_component",
                inputs=tuple(velocity_fields), component=(i, j), viscosity=viscosity))
    return recipes


def region_means(fld: ScalarField, tess: Tessellation) -> np.ndarray:
    """Mean of a raw field over each region (e.g. mean temperature)."""
    if fld.grid.dims != tuple(tess.grid_dims):
        raise StatsError("grid mismatch")
    labels = tess.region_label.ravel(order="F")
    inside = labels >= 0
    sums = np.bincount(labels[inside], weights=fld.values.ravel(order="F")[inside].astype(np.float64),
                       minlength=tess.n_regions)
    counts = np.array([r.voxel_count for r in tess.regions], dtype=np.float64)
    return sums / counts


def scatter_samples(tess: Tessellation, columns: dict[str, np.ndarray]) -> dict:
    """One row per region from per-region column vectors; flags constant
    columns so histogram binning can special-case them."""
    R = tess.n_regions
    for name, col in columns.items():
        if len(col) != R:
            raise StatsError(f"column {name!r} has {len(col)} values for {R} regions")
    names = list(columns)
    rows = [[int(r.id)] + [float(columns[c][i]) for c in names] for i, r in enumerate(tess.regions)]
    degenerate = [c for c in names if np.ptp(columns[c]) == 0]
    return {"columns": ["region_id"] + names, "rows": rows, "degenerate": degenerate}
