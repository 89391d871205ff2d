"""Estimator-style wrappers over the functional pipeline.

Thin fit/transform adapters so the stages compose with scikit-learn style
tooling (get_params/set_params, cloning). Fitting is cheap: it validates
parameters and caches anything grid-dependent (e.g. the window bank); the
heavy lifting happens in transform.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .geometry import extract_isosurface, signed_distance_field
from .lsrcvt import BandSpec, tessellate
from .specfilter import ScaleBinSpec, build_window_bank, decompose
from .stats import aggregate_energy


class ScaleBandDecomposer(BaseEstimator, TransformerMixin):
    """Decompose scalar fields into additive scale-bin band fields.

    Parameters mirror ScaleBinSpec / build_window_bank. fit() builds the
    window bank for the field's grid; transform() filters the field.
    """

    def __init__(self, bin_edges=(1, 2, 3), include_j0=True,
                 profile="concentric-square", transition=1.0 / 3.0):
        self.bin_edges = bin_edges
        self.include_j0 = include_j0
        self.profile = profile
        self.transition = transition

    def fit(self, X, y=None):
        spec = ScaleBinSpec(tuple(self.bin_edges), self.include_j0)
        self.bank_ = build_window_bank(X.grid, spec, self.profile, self.transition)
        return self

    def transform(self, X):
        if not hasattr(self, "bank_"):
            raise RuntimeError("ScaleBandDecomposer is not fitted")
        if X.grid.dims != self.bank_.grid.dims:
            self.fit(X)
        return decompose(X, self.bank_)


class SurfaceTessellator(BaseEstimator, TransformerMixin):
    """Feature surface -> signed distance -> LSRCVT regions, in one step.

    transform(X) takes the surface-defining scalar field and returns the
    Tessellation; the intermediate mesh and distance field are kept as
    mesh_ and distance_.
    """

    def __init__(self, isovalue=0.0, max_band=None, band_isovalues=(-1.0, 0.0, 1.0),
                 density=0.015, seed=0, max_iters=50, move_tolerance=0.5):
        self.isovalue = isovalue
        self.max_band = max_band
        self.band_isovalues = band_isovalues
        self.density = density
        self.seed = seed
        self.max_iters = max_iters
        self.move_tolerance = move_tolerance

    def fit(self, X, y=None):
        self.spec_ = BandSpec(tuple(self.band_isovalues), self.density, self.seed,
                              self.max_iters, self.move_tolerance)
        return self

    def transform(self, X):
        if not hasattr(self, "spec_"):
            self.fit(X)
        self.mesh_ = extract_isosurface(X, self.isovalue)
        self.distance_ = signed_distance_field(self.mesh_, X, self.isovalue, self.max_band)
        return tessellate(self.distance_, self.spec_)


class RegionAggregator(BaseEstimator, TransformerMixin):
    """Aggregate a BandDecomposition over a fitted tessellation."""

    def __init__(self, mode="squared"):
        self.mode = mode

    def fit(self, X, y=None):
        """X is the Tessellation the aggregates are computed over."""
        self.tessellation_ = X
        return self

    def transform(self, X):
        if not hasattr(self, "tessellation_"):
            raise RuntimeError("RegionAggregator is not fitted")
        return aggregate_energy(X, self.tessellation_, self.mode)
