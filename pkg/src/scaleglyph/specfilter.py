"""Tight-frame scale decomposition.

A bank of smooth concentric frequency windows, one per scale bin, that sums
to one at every frequency sample. Filtering a field with the bank and
inverse-transforming yields additive band fields; filtering with the square
roots of the windows conserves energy exactly (Parseval).

Scale indexing: j = 0 is the low-pass with nominal length L; detail scale j
corresponds to physical length L / 2**j, down to j_e = floor(log2(N_min/2))
whose length is two grid spacings.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .core import BlockLayout, Grid3, ScalarField, composite_blocks, split_blocks, tukey_taper

DEFAULT_TRANSITION = 1.0 / 3.0


class SpecFilterError(ValueError):
    pass


def max_scales(n: int) -> int:
    """Largest usable detail-scale index for a grid dimension n."""
    if n < 4:
        raise SpecFilterError(f"grid dimension {n} too small (need >= 4)")
    return int(math.floor(math.log2(n / 2)))


def scale_length(j: int, L: float) -> float:
    """Physical length of scale j; j = 0 is the low-pass, reported as L."""
    if j < 0 or L <= 0:
        raise SpecFilterError(f"invalid scale/length ({j}, {L})")
    return L / 2**j


@dataclass(frozen=True)
class ScaleBinSpec:
    """Partition of detail scales [1 .. bin_edges[-1]-1] into contiguous bins.

    Bin k covers scales [bin_edges[k], bin_edges[k+1]). When include_j0 is
    set, the low-pass scale j=0 is merged into the coarsest bin (which must
    then start at edge 1); otherwise low-pass content is discarded and a
    constant field decomposes to (near-)zero bands.
    """

    bin_edges: tuple[int, ...]
    include_j0: bool = True
    domain_length: float | None = None  # physical L; defaults to min grid side

    def __post_init__(self):
        edges = tuple(int(e) for e in self.bin_edges)
        object.__setattr__(self, "bin_edges", edges)
        if len(edges) < 2:
            raise SpecFilterError("need at least two bin edges")
        if list(edges) != sorted(set(edges)) or edges[0] < 1:
            raise SpecFilterError(f"bin edges must be strictly increasing and >= 1, got {edges}")

    @property
    def n_bins(self) -> int:
        return len(self.bin_edges) - 1

    def bin_scales(self, k: int) -> range:
        """Detail scales in bin k (the j=0 low-pass is tracked separately)."""
        return range(self.bin_edges[k], self.bin_edges[k + 1])

    def bin_range(self, k: int) -> tuple[int, int]:
        """(j_min, j_max) inclusive; j_min = 0 when the bin holds the low-pass."""
        j_min = self.bin_edges[k]
        if k == 0 and self.include_j0:
            j_min = 0
        return j_min, self.bin_edges[k + 1] - 1

    def validate_for(self, grid: Grid3):
        L = self.domain_length_for(grid)
        je = int(math.floor(math.log2(L / (2.0 * min(grid.spacing)))))
        if self.bin_edges[-1] - 1 > je:
            raise SpecFilterError(
                f"finest bin edge {self.bin_edges[-1]} exceeds max scale {je} for L={L}, spacing {grid.spacing}"
            )
        if self.include_j0 and self.bin_edges[0] != 1:
            raise SpecFilterError("include_j0 requires the coarsest bin to start at scale 1")

    def bin_length_span(self, k: int, L: float) -> float:
        """Length-scale span of bin k: L/2^j_min - L/2^(j_max+1)."""
        j_min, j_max = self.bin_range(k)
        return scale_length(j_min, L) - scale_length(j_max + 1, L)

    def domain_length_for(self, grid: Grid3) -> float:
        if self.domain_length is not None:
            return float(self.domain_length)
        return min(grid.lengths)

    def to_dict(self) -> dict:
        return {
            "bin_edges": list(self.bin_edges),
            "include_j0": self.include_j0,
            "domain_length": self.domain_length,
        }

    @classmethod
    def from_dict(cls, d) -> "ScaleBinSpec":
        return cls(tuple(d["bin_edges"]), d.get("include_j0", True), d.get("domain_length"))


def _normalized_radius(grid: Grid3, profile: str) -> np.ndarray:
    """Per-sample frequency radius on the FFT lattice, normalized so the
    Nyquist frequency of each axis sits at 1."""
    axes = []
    for n in grid.dims:
        f = np.fft.fftfreq(n) * 2.0  # |f| in [0, 1], 1 at Nyquist
        axes.append(np.abs(f))
    fx, fy, fz = np.meshgrid(*axes, indexing="ij", sparse=True)
    if profile == "concentric-square":
        return np.maximum(np.maximum(fx, fy), fz)
    if profile == "radial":
        return np.sqrt(fx**2 + fy**2 + fz**2)
    raise SpecFilterError(f"unknown profile {profile!r}")


def _rising_edge(rho: np.ndarray, boundary: float, width: float) -> np.ndarray:
    """Raised-cosine step 0 -> 1 centered on ``boundary`` over ``width``."""
    lo = boundary - 0.5 * width
    t = np.clip((rho - lo) / width, 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * t))


@dataclass
class WindowBank:
    """Per-bin frequency windows over a grid's FFT lattice.

    The bin windows, plus the dropped low-pass remainder when include_j0 is
    false, telescope to exactly one at every frequency sample.
    """

    grid: Grid3
    spec: ScaleBinSpec
    profile: str
    transition: float
    windows: list[np.ndarray]  # one per bin
    remainder: np.ndarray | None  # spectrum not covered by any bin, or None

    def partition_sum(self) -> np.ndarray:
        s = sum(self.windows)
        if self.remainder is not None:
            s = s + self.remainder
        return s


def build_window_bank(
    grid: Grid3,
    spec: ScaleBinSpec,
    profile: str = "concentric-square",
    transition: float = DEFAULT_TRANSITION,
) -> WindowBank:
    """Build the tight-frame window bank for a grid.

    Each bin window is a telescoped difference of raised-cosine edge steps
    at the dyadic radii of its edge scales, so the full set is an exact
    partition of unity.
    """
    spec.validate_for(grid)
    if not (0 < transition <= 1):
        raise SpecFilterError(f"transition fraction must be in (0, 1], got {transition}")
    rho = _normalized_radius(grid, profile)
    # scale boundaries are anchored at physical wavelengths L / 2**j so
    # that a block bank (same spacing, smaller extent) matches the parent
    L_ref = spec.domain_length_for(grid)
    base = 2.0 * min(grid.spacing) / L_ref  # normalized radius of boundary j=0

    def inside(j_boundary: int) -> np.ndarray:
        """Smooth indicator of the region below the boundary between scales
        j_boundary and j_boundary + 1 (dyadic radius base * 2**j_boundary)."""
        if j_boundary < 0:
            return np.zeros_like(rho)
        r = base * 2.0**j_boundary
        if r >= 1.0:
            # at or beyond Nyquist: no cutoff, lattice corners included
            return np.ones_like(rho)
        width = transition * (r if j_boundary == 0 else 0.5 * r)
        return 1.0 - _rising_edge(rho, r, width)

    edges = list(spec.bin_edges)
    windows = []
    for k in range(spec.n_bins):
        lower = -1 if (k == 0 and spec.include_j0) else edges[k] - 1
        upper = edges[k + 1] - 1
        windows.append(inside(upper) - inside(lower))
    remainder = None
    low = np.zeros_like(rho) if spec.include_j0 else inside(edges[0] - 1)
    high = 1.0 - inside(edges[-1] - 1)
    if low.any() or high.any():
        remainder = low + high
    return WindowBank(grid, spec, profile, transition, windows, remainder)


@dataclass
class BandDecomposition:
    """Per-bin band fields of one source field, with bin metadata."""

    source_name: str
    spec: ScaleBinSpec
    grid: Grid3
    bands: list[ScalarField]
    band_energy: list[float]
    profile: str = "concentric-square"
    lineage: dict = field(default_factory=dict)

    @property
    def n_bins(self) -> int:
        return len(self.bands)

    def bin_length_spans(self) -> list[float]:
        L = self.spec.domain_length_for(self.grid)
        return [self.spec.bin_length_span(k, L) for k in range(self.spec.n_bins)]

    def save(self, directory, basename=None):
        os.makedirs(directory, exist_ok=True)
        base = basename or self.source_name
        paths = []
        for k, b in enumerate(self.bands):
            p = os.path.join(directory, f"{base}.bin{k}.raw")
            b.save_raw(p)
            paths.append(os.path.basename(p))
        sidecar = {
            "source": self.source_name,
            "grid": self.grid.to_dict(),
            "spec": self.spec.to_dict(),
            "profile": self.profile,
            "bin_length_spans": self.bin_length_spans(),
            "band_energy": self.band_energy,
            "band_files": paths,
            "lineage": self.lineage,
        }
        with open(os.path.join(directory, f"{base}.bands.json"), "w") as fp:
            json.dump(sidecar, fp, indent=2)

    @classmethod
    def load(cls, directory, basename) -> "BandDecomposition":
        from .core import load_raw

        with open(os.path.join(directory, f"{basename}.bands.json")) as fp:
            d = json.load(fp)
        grid = Grid3.from_dict(d["grid"])
        spec = ScaleBinSpec.from_dict(d["spec"])
        bands = [
            load_raw(os.path.join(directory, p), grid, name=f"{d['source']}.bin{k}")
            for k, p in enumerate(d["band_files"])
        ]
        return cls(d["source"], spec, grid, bands, d["band_energy"], d.get("profile", "concentric-square"),
                   d.get("lineage", {}))


def decompose(fld: ScalarField, bank: WindowBank) -> BandDecomposition:
    """Filter a field into band fields, one per scale bin.

    The caller is responsible for making the field periodic-safe (mirror
    extension or taper) before decomposing.
    """
    if fld.grid.dims != bank.grid.dims:
        raise SpecFilterError(f"grid mismatch: field {fld.grid.dims} vs bank {bank.grid.dims}")
    spectrum = np.fft.fftn(fld.values)
    fmax = float(np.max(np.abs(fld.values))) or 1.0
    bands, energies = [], []
    for k, w in enumerate(bank.windows):
        x = np.fft.ifftn(w * spectrum)
        resid = float(np.max(np.abs(x.imag)))
        if resid > 1e-6 * fmax:
            raise SpecFilterError(f"bin {k}: imaginary residue {resid:.3g} exceeds tolerance")
        xr = x.real
        bands.append(fld.with_values(xr, name=f"{fld.name}.bin{k}"))
        energies.append(float(np.sum(xr.astype(np.float64) ** 2)))
    return BandDecomposition(fld.name, bank.spec, fld.grid, bands, energies, bank.profile)


def decompose_mirrored(fld: ScalarField, spec: ScaleBinSpec, profile="concentric-square",
                       transition=DEFAULT_TRANSITION) -> BandDecomposition:
    """Mirror-extend, decompose on the extended grid, crop bands back."""
    from .core import crop, mirror_extend

    ext = mirror_extend(fld)
    bank = build_window_bank(ext.grid, spec, profile, transition)
    dec = decompose(ext, bank)
    dims = fld.grid.dims
    extent = tuple((0, d) for d in dims)
    bands = [b.with_values(crop(b, extent).values, grid=fld.grid) for b in dec.bands]
    energies = [float(np.sum(b.values.astype(np.float64) ** 2)) for b in bands]
    out = BandDecomposition(fld.name, spec, fld.grid, bands, energies, profile)
    out.lineage = {"preprocessing": "mirror-extend"}
    return out


def decompose_blocked(fld: ScalarField, spec: ScaleBinSpec, layout: BlockLayout,
                      profile="concentric-square", transition=DEFAULT_TRANSITION) -> BandDecomposition:
    """Overlapping-block decomposition: taper each block, decompose it with a
    per-block bank, and composite owned interiors per bin.

    Ghost margins wrap periodically at domain faces (the same periodicity
    the full-domain transform assumes), and the taper is applied to the
    fluctuation about the block mean so coarse content survives it.
    """
    dims = fld.grid.dims
    axis_own = []  # per axis: list of (own0, own1), plus ghost/taper used
    ghosts, tapers = [], []
    for ax in range(3):
        spans = layout.axis_spans(dims[ax], ax)
        own = [(o0, o1) for (_, _, o0, o1) in spans]
        axis_own.append(own)
        multi = len(own) > 1
        ghosts.append(layout.overlap[ax] if multi else 0)
        tapers.append(layout.taper_width[ax] if multi else 0)

    n_bins = spec.n_bins
    per_bin_blocks: list[list] = [[] for _ in range(n_bins)]
    banks: dict[tuple, WindowBank] = {}
    anchor_L = spec.domain_length_for(fld.grid)
    for (ox0, ox1) in axis_own[0]:
        for (oy0, oy1) in axis_own[1]:
            for (oz0, oz1) in axis_own[2]:
                lo = (ox0 - ghosts[0], oy0 - ghosts[1], oz0 - ghosts[2])
                hi = (ox1 + ghosts[0], oy1 + ghosts[1], oz1 + ghosts[2])
                idx = [np.arange(lo[a], hi[a]) % dims[a] for a in range(3)]
                vals = fld.values[np.ix_(*idx)]
                bgrid = Grid3(vals.shape, fld.grid.spacing,
                              fld.grid.voxel_center(lo))
                blk = ScalarField(bgrid, fld.name, vals, fld.units)
                if any(tapers):
                    # taper the fluctuation about the block mean so coarse
                    # content survives the roll-off
                    mean = float(blk.values.mean())
                    tapered = tukey_taper(blk.with_values(blk.values - mean), tuple(tapers))
                    tapered = tapered.with_values(tapered.values + mean)
                else:
                    tapered = blk
                key = bgrid.dims
                if key not in banks:
                    block_spec = ScaleBinSpec(spec.bin_edges, spec.include_j0, anchor_L)
                    banks[key] = build_window_bank(bgrid, block_spec, profile, transition)
                dec = decompose(tapered, banks[key])
                extent = ((ox0, ox1), (oy0, oy1), (oz0, oz1))
                for k in range(n_bins):
                    per_bin_blocks[k].append((dec.bands[k], extent, lo))
    bands, energies = [], []
    for k in range(n_bins):
        b = composite_blocks(per_bin_blocks[k], fld.grid, name=f"{fld.name}.bin{k}", units=fld.units)
        bands.append(b)
        energies.append(float(np.sum(b.values.astype(np.float64) ** 2)))
    out = BandDecomposition(fld.name, spec, fld.grid, bands, energies, profile)
    out.lineage = {
        "preprocessing": "blocked-taper",
        "block_dims": list(layout.block_dims),
        "overlap": list(layout.overlap),
        "taper_width": list(layout.taper_width),
    }
    return out


def frame_energy_check(fld: ScalarField, bank: WindowBank) -> float:
    """Energy-conservation diagnostic in the sqrt-window frame:
    sum_bins ||ifft(sqrt(v) * F)||^2 / ||field||^2 - 1."""
    total = float(np.sum(np.abs(fld.values.astype(np.float64)) ** 2))
    if total == 0.0:
        raise SpecFilterError("frame_energy_check undefined for a zero-energy field")
    spectrum = np.fft.fftn(fld.values)
    acc = 0.0
    for w in bank.windows:
        x = np.fft.ifftn(np.sqrt(w) * spectrum)
        acc += float(np.sum(np.abs(x) ** 2))
    if bank.remainder is not None:
        x = np.fft.ifftn(np.sqrt(bank.remainder) * spectrum)
        acc += float(np.sum(np.abs(x) ** 2))
    return acc / total - 1.0
