"""Viewer-facing glyph datasets.

Packs a tessellation plus its per-region statistics table into flat GPU-ready
buffers, and provides the reference math a renderer must reproduce: the flat
statistics index law, the per-glyph orientation basis, fragment classification
for the strength (ring/wedge) and starplot designs, and the normalization
range semantics.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .lsrcvt import Tessellation
from .specfilter import scale_length
from .stats import RegionStats

GLYPH_MAGIC = b"SGLY"
GLYPH_VERSION = 1

TRANSFORMS = ("linear", "sqrt", "log")


class GlyphError(ValueError):
    pass


def stat_index(i: int, l: int, k: int, M: int, N: int) -> int:
    """Flat index of bin k of field l in region i: i*M*N + N*l + k."""
    if not (0 <= l < M and 0 <= k < N and i >= 0):
        raise GlyphError(f"stat_index out of range: i={i}, l={l}/{M}, k={k}/{N}")
    return i * M * N + N * l + k


def stat_bytes_per_component(n_regions: int) -> int:
    """On-disk size of one (field, bin) statistics slice: 4 bytes per region."""
    return 4 * n_regions


def _normalize(v: np.ndarray) -> np.ndarray | None:
    n = np.linalg.norm(v)
    if n <= 1e-12:
        return None
    return v / n


def orientation_matrix(normal, view_basis) -> np.ndarray:
    """Per-glyph orthonormal basis, rows (right, up, forward).

    up is the surface normal; right = normalize(up x up_view) keeps the glyph
    facing the camera. When up is parallel to up_view the fallback chain is
    up x forward_view, then right_view itself.
    """
    r_view, u_view, f_view = (np.asarray(v, dtype=np.float64) for v in view_basis)
    u = np.asarray(normal, dtype=np.float64)
    r = _normalize(np.cross(u, u_view))
    if r is None:
        r = _normalize(np.cross(u, f_view))
    if r is None:
        r = r_view / np.linalg.norm(r_view)
    f = np.cross(r, u)
    return np.array([r, u, f])


def fragment_polar(p_m) -> tuple[float, float]:
    """Model-space fragment angle about the up axis and radius.

    theta = atan2(x, z) + pi in [0, 2*pi); full 2*pi wraps to 0.
    """
    p = np.asarray(p_m, dtype=np.float64)
    x, z = (p[0], p[2]) if p.shape[0] == 3 else (p[0], p[1])
    theta = math.atan2(x, z) + math.pi
    if theta >= 2.0 * math.pi:
        theta -= 2.0 * math.pi
    return theta, float(np.linalg.norm(p))


def classify_strength_fragment(p_m, M: int, N: int) -> tuple[int, int]:
    """(field l, bin k) of a fragment on the unit disk for the strength
    design: wedges are fields, concentric rings are bins with the innermost
    ring the coarsest scale."""
    theta, r = fragment_polar(p_m)
    k = min(N - 1, int(math.floor(r * N)))
    l = min(M - 1, int(math.floor(theta * M / (2.0 * math.pi))))
    return l, k


def starplot_axis_points(l_a: int, M: int, value_a: float, value_b: float) -> tuple[np.ndarray, np.ndarray]:
    """Scaled wedge endpoints p_a, p_b on axes l_a and (l_a + 1) mod M."""
    theta_a = l_a * 2.0 * math.pi / M
    theta_b = ((l_a + 1) % M) * 2.0 * math.pi / M
    p_a = value_a * np.array([math.cos(theta_a), math.sin(theta_a)])
    p_b = value_b * np.array([math.cos(theta_b), math.sin(theta_b)])
    return p_a, p_b


def starplot_wedge_test(p_m, p_a, p_b) -> bool:
    """Is a 2D fragment inside the triangle [p_a, p_b, origin]?

    The hypotenuse test is the half-plane expression
    (p_b.x - p_a.x)(p_m.y - p_a.y) - (p_b.y - p_a.y)(p_m.x - p_a.x) > 0;
    the two spoke edges are tested the same way (boundary counts inside).
    """
    p = np.asarray(p_m, dtype=np.float64)[:2]
    a = np.asarray(p_a, dtype=np.float64)[:2]
    b = np.asarray(p_b, dtype=np.float64)[:2]
    if p[0] == 0.0 and p[1] == 0.0:
        return True
    hyp = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if hyp <= 0:
        return False
    spoke_a = a[0] * p[1] - a[1] * p[0]   # left of edge origin -> p_a
    spoke_b = b[0] * p[1] - b[1] * p[0]   # right of edge origin -> p_b
    return spoke_a >= 0 >= spoke_b


def classify_starplot_fragment(p_m, axis_values) -> bool:
    """Is a 2D fragment inside the starplot polygon with the given per-axis
    radii? The fragment's wedge is chosen by its angle."""
    values = np.asarray(axis_values, dtype=np.float64)
    M = len(values)
    if M < 3:
        raise GlyphError("starplot needs at least 3 axes")
    p = np.asarray(p_m, dtype=np.float64)[:2]
    theta = math.atan2(p[1], p[0]) % (2.0 * math.pi)
    l_a = min(M - 1, int(math.floor(theta * M / (2.0 * math.pi))))
    l_b = (l_a + 1) % M
    p_a, p_b = starplot_axis_points(l_a, M, values[l_a], values[l_b])
    return starplot_wedge_test(p, p_a, p_b)


@dataclass
class GlyphDataset:
    """Flat per-band glyph buffers: one glyph per region of the band."""

    band: int
    region_ids: np.ndarray    # (R,) int32 tessellation region ids
    positions: np.ndarray     # (R, 3) float
    normals: np.ndarray       # (R, 3) float, unit
    buffer: np.ndarray        # (R*M*N,) float, stat_index layout
    field_names: list[str]
    bin_edges: list[int]
    bin_lengths: list[float]  # physical scale_length at each bin edge
    defaults: dict = field(default_factory=dict)

    def __post_init__(self):
        self.region_ids = np.asarray(self.region_ids, dtype=np.int32).reshape(-1)
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        self.buffer = np.asarray(self.buffer, dtype=np.float64).reshape(-1)
        R, M, N = self.n_regions, self.n_fields, self.n_bins
        if len(self.positions) != R or len(self.normals) != R:
            raise GlyphError("positions/normals length must equal region count")
        if len(self.buffer) != R * M * N:
            raise GlyphError(f"buffer length {len(self.buffer)} != R*M*N = {R * M * N}")

    @property
    def n_regions(self) -> int:
        return len(self.region_ids)

    @property
    def n_fields(self) -> int:
        return len(self.field_names)

    @property
    def n_bins(self) -> int:
        return len(self.bin_edges) - 1

    def value(self, i: int, l: int, k: int) -> float:
        return float(self.buffer[stat_index(i, l, k, self.n_fields, self.n_bins)])

    def stats_array(self) -> np.ndarray:
        """Buffer viewed as (R, M, N)."""
        return self.buffer.reshape(self.n_regions, self.n_fields, self.n_bins)

    def save(self, path, sidecar_path=None):
        R, M, N = self.n_regions, self.n_fields, self.n_bins
        with open(path, "wb") as fp:
            fp.write(GLYPH_MAGIC)
            fp.write(struct.pack("<IIIIi", GLYPH_VERSION, R, M, N, self.band))
            fp.write(self.positions.astype("<f4").tobytes())
            fp.write(self.normals.astype("<f4").tobytes())
            fp.write(self.buffer.astype("<f4").tobytes())
        if sidecar_path:
            with open(sidecar_path, "w") as fp:
                json.dump({
                    "band": self.band,
                    "region_ids": [int(r) for r in self.region_ids],
                    "field_names": self.field_names,
                    "bin_edges": list(self.bin_edges),
                    "bin_lengths": list(self.bin_lengths),
                    "defaults": self.defaults,
                }, fp, indent=2)

    @classmethod
    def load(cls, path, sidecar_path) -> "GlyphDataset":
        with open(sidecar_path) as fp:
            meta = json.load(fp)
        with open(path, "rb") as fp:
            magic = fp.read(4)
            if magic != GLYPH_MAGIC:
                raise GlyphError(f"bad glyph file magic {magic!r}")
            version, R, M, N, band = struct.unpack("<IIIIi", fp.read(20))
            if version != GLYPH_VERSION:
                raise GlyphError(f"unsupported glyph file version {version}")
            pos = np.frombuffer(fp.read(12 * R), dtype="<f4").reshape(R, 3)
            nrm = np.frombuffer(fp.read(12 * R), dtype="<f4").reshape(R, 3)
            buf = np.frombuffer(fp.read(4 * R * M * N), dtype="<f4")
        return cls(band, meta["region_ids"], pos, nrm, buf, meta["field_names"],
                   meta["bin_edges"], meta["bin_lengths"], meta.get("defaults", {}))


def pack_glyphs(tess: Tessellation, stats: RegionStats, field_order=None,
                band: int | None = None, domain_length: float | None = None) -> GlyphDataset:
    """Pack one band's regions into a GlyphDataset.

    field_order selects and orders the stats fields; band defaults to the
    lowest band present. Buffer values land at their stat_index slots.
    """
    if stats.n_regions != tess.n_regions:
        raise GlyphError(f"stats cover {stats.n_regions} regions, tessellation has {tess.n_regions}")
    names = list(field_order) if field_order is not None else list(stats.field_names)
    missing = [n for n in names if n not in stats.field_names]
    if missing:
        raise GlyphError(f"unknown fields: {missing}")
    cols = [stats.field_index(n) for n in names]
    if band is None:
        band = min(r.band for r in tess.regions)
    regions = [r for r in tess.regions if r.band == band]
    if not regions:
        raise GlyphError(f"no regions in band {band}")
    ids = np.array([r.id for r in regions], dtype=np.int32)
    pos = np.array([r.site for r in regions])
    nrm = np.array([r.normal for r in regions])
    table = stats.values[ids][:, cols, :]            # (R, M, N)
    buffer = table.reshape(-1)                       # C order matches stat_index
    L = domain_length
    edge_lengths = [scale_length(e, L) if L else float(e) for e in stats.bin_edges]
    return GlyphDataset(int(band), ids, pos, nrm, buffer, names,
                        list(stats.bin_edges), edge_lengths,
                        defaults={"mode": stats.mode})


@dataclass(frozen=True)
class NormalizationConfig:
    """Scalar-mapping range options for the visual encoding."""

    spatial: str = "GSN"          # GSN | LSN
    bins: str = "GBN"             # GBN | LBN
    per_glyph: bool = False       # PGN: bin vector sums to 1 per region/field
    all_axes: bool = False        # one common range across fields
    zero_min: bool = False        # force range minimum to 0
    visible_bands: tuple = ()
    visible_bins: tuple = ()
    transform: str = "linear"     # linear | sqrt | log

    def __post_init__(self):
        if self.spatial not in ("GSN", "LSN"):
            raise GlyphError(f"spatial must be GSN or LSN, got {self.spatial!r}")
        if self.bins not in ("GBN", "LBN"):
            raise GlyphError(f"bins must be GBN or LBN, got {self.bins!r}")
        if self.transform not in TRANSFORMS:
            raise GlyphError(f"transform must be one of {TRANSFORMS}")
        if self.spatial == "LSN" and not self.visible_bands:
            raise GlyphError("LSN requires a non-empty visible band set")
        if self.bins == "LBN" and not self.visible_bins:
            raise GlyphError("LBN requires a non-empty visible bin set")


@dataclass
class NormalizationResult:
    gamma: np.ndarray             # (M, 2) per-field (min, max)
    buffers: list[np.ndarray]     # transformed (R, M, N) per dataset
    zero_flagged: list[np.ndarray]  # (R, M) bool per dataset: zero-sum PGN vectors


def apply_per_glyph(table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rescale each region/field bin vector to sum 1; all-zero-sum vectors
    stay zero and are flagged."""
    sums = table.sum(axis=2, keepdims=True)
    flagged = sums[..., 0] == 0
    safe = np.where(sums == 0, 1.0, sums)
    out = table / safe
    out[flagged] = 0.0
    return out, flagged


def apply_transform(values: np.ndarray, transform: str, gamma_max: float) -> np.ndarray:
    if transform == "linear":
        return values
    if transform == "sqrt":
        return np.sqrt(values)
    eps = 1e-12 * gamma_max if gamma_max > 0 else 1e-12
    return np.log1p(values / eps)


def normalization_range(datasets, config: NormalizationConfig) -> NormalizationResult:
    """Compute per-field scalar mapping ranges over the visible selection.

    The selection is J' x B': all bands and bins when global (GSN/GBN),
    the config's visible subsets when local (LSN/LBN). PGN and the value
    transform are applied before the min/max.
    """
    datasets = list(datasets)
    if not datasets:
        raise GlyphError("normalization_range needs at least one dataset")
    M = datasets[0].n_fields
    N = datasets[0].n_bins
    for d in datasets:
        if d.n_fields != M or d.n_bins != N:
            raise GlyphError("datasets disagree on field/bin counts")

    tables, flags = [], []
    for d in datasets:
        t = d.stats_array().copy()
        if config.per_glyph:
            t, fl = apply_per_glyph(t)
        else:
            fl = np.zeros(t.shape[:2], dtype=bool)
        tables.append(t)
        flags.append(fl)

    if config.spatial == "GSN":
        band_sel = list(range(len(datasets)))
    else:
        by_band = {d.band: i for i, d in enumerate(datasets)}
        try:
            band_sel = [by_band[b] for b in config.visible_bands]
        except KeyError as e:
            raise GlyphError(f"visible band {e} not among datasets") from None
    bin_sel = list(range(N)) if config.bins == "GBN" else list(config.visible_bins)
    if any(not (0 <= k < N) for k in bin_sel):
        raise GlyphError(f"visible bins {bin_sel} out of range for {N} bins")

    gmax = max(float(tables[i][:, :, bin_sel].max()) for i in band_sel)
    tables = [apply_transform(t, config.transform, gmax) for t in tables]

    sel = np.concatenate([tables[i][:, :, bin_sel].reshape(-1, M * len(bin_sel))
                          for i in band_sel], axis=0)
    per_field = sel.reshape(-1, M, len(bin_sel))
    gamma = np.stack([per_field.min(axis=(0, 2)), per_field.max(axis=(0, 2))], axis=1)
    if config.all_axes:
        gamma[:, 0] = gamma[:, 0].min()
        gamma[:, 1] = gamma[:, 1].max()
    if config.zero_min:
        gamma[:, 0] = 0.0
    return NormalizationResult(gamma, tables, flags)
