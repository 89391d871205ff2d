"""Scale-decomposed surface glyph pipeline.

Decomposes volumetric fields by length scale with a tight-frame spectral
window bank, aggregates band energy over level-set-restricted centroidal
Voronoi regions around a feature isosurface, and packs the results into
surface-aligned glyph datasets served over HTTP.
"""

from .core import Grid3, ScalarField, VolumeManifest, load_field, load_raw
from .geometry import DistanceField, TriangleMesh, extract_isosurface, signed_distance_field
from .glyphpack import GlyphDataset, NormalizationConfig, normalization_range, pack_glyphs
from .lsrcvt import BandSpec, Tessellation, tessellate
from .pipeline import run_pipeline
from .specfilter import (BandDecomposition, ScaleBinSpec, WindowBank, build_window_bank,
                         decompose, decompose_blocked, decompose_mirrored, max_scales,
                         scale_length)
from .stats import RegionStats, aggregate_energy
from .transformers import RegionAggregator, ScaleBandDecomposer, SurfaceTessellator

__version__ = "0.1.0"

__all__ = [
    "Grid3", "ScalarField", "VolumeManifest", "load_field", "load_raw",
    "TriangleMesh", "DistanceField", "extract_isosurface", "signed_distance_field",
    "BandSpec", "Tessellation", "tessellate",
    "ScaleBinSpec", "WindowBank", "BandDecomposition", "build_window_bank",
    "decompose", "decompose_blocked", "decompose_mirrored", "max_scales", "scale_length",
    "RegionStats", "aggregate_energy",
    "GlyphDataset", "NormalizationConfig", "normalization_range", "pack_glyphs",
    "ScaleBandDecomposer", "SurfaceTessellator", "RegionAggregator",
    "run_pipeline",
    "__version__",
]
