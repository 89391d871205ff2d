"""End-to-end pipeline: preprocess -> decompose -> surface -> distance ->
tessellate -> aggregate -> pack.

The pipeline is driven by one JSON config document. Every stage records its
effective parameters (defaults included) in provenance.json; a stage is
skipped on rerun when its outputs exist and its config/input hash matches the
recorded one, so reruns of an unchanged config are no-ops.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .core import BlockLayout, Grid3, VolumeManifest, downsample, load_field
from .geometry import DistanceField, TriangleMesh, extract_isosurface, signed_distance_field
from .glyphpack import GlyphDataset, pack_glyphs
from .lsrcvt import BandSpec, Tessellation, tessellate
from .specfilter import (BandDecomposition, ScaleBinSpec, build_window_bank, decompose,
                         decompose_blocked, decompose_mirrored)
from .stats import RegionStats, aggregate_energy, region_means, scatter_samples

STAGES = ("preprocess", "decompose", "surface", "distance", "tessellate", "aggregate", "pack")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


_DEFAULTS = {
    "preprocess": {"downsample": 1},
    "decompose": {"fields": None, "bin_edges": None, "include_j0": True,
                  "profile": "concentric-square", "transition": 1.0 / 3.0,
                  "method": "plain", "block_dims": None, "overlap": 0, "taper_width": 0},
    "surface": {"field": None, "isovalue": None, "name": None},
    "distance": {"max_band": None},
    "tessellate": {"isovalues": None, "density": 0.015, "seed": 0,
                   "max_iters": 50, "move_tolerance": 0.5},
    "aggregate": {"mode": "squared"},
    "pack": {"field_order": None},
}


def _stage_config(config: dict, stage: str) -> dict:
    merged = dict(_DEFAULTS[stage])
    merged.update(config.get(stage, {}))
    return merged


def _hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fp:
        for chunk in iter(lambda: fp.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class _Runner:
    config: dict
    out_dir: str
    provenance: dict
    log: list

    def stage_dir(self, stage: str) -> str:
        d = os.path.join(self.out_dir, stage)
        os.makedirs(d, exist_ok=True)
        return d

    def should_skip(self, stage: str, key: str, outputs: list[str]) -> bool:
        rec = self.provenance.get("stages", {}).get(stage)
        if rec is None or rec.get("hash") != key:
            return False
        return all(os.path.exists(p) for p in outputs)

    def record(self, stage: str, key: str, params: dict, outputs: list[str], skipped: bool):
        self.provenance.setdefault("stages", {})[stage] = {
            "hash": key, "params": params,
            "outputs": [os.path.relpath(p, self.out_dir) for p in outputs],
        }
        self.log.append((stage, "skipped" if skipped else "ran"))


def run_pipeline(config: dict, log: list | None = None) -> dict:
    """Execute all stages; returns the artifact map. ``log`` (if given)
    collects (stage, ran|skipped) pairs."""
    out_dir = config["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    prov_path = os.path.join(out_dir, "provenance.json")
    provenance = {}
    if os.path.exists(prov_path):
        with open(prov_path) as fp:
            provenance = json.load(fp)
    runner = _Runner(config, out_dir, provenance, log if log is not None else [])

    artifacts: dict = {}
    manifest_hash = _file_hash(config["manifest"])

    # preprocess: optional downsample; always rewrites a manifest for the run
    p = _stage_config(config, "preprocess")
    key = _hash([p, manifest_hash])
    pre_dir = runner.stage_dir("preprocess")
    pre_manifest = os.path.join(pre_dir, "manifest.json")
    if runner.should_skip("preprocess", key, [pre_manifest]):
        runner.record("preprocess", key, p, [pre_manifest], skipped=True)
    else:
        try:
            src = VolumeManifest.load(config["manifest"])
            entries = []
            grid = None
            for e in src.fields:
                f = load_field(src, e["name"])
                f = downsample(f, int(p["downsample"]))
                f.save_raw(os.path.join(pre_dir, f"{e['name']}.raw"))
                grid = f.grid
                entries.append({"name": e["name"], "units": e.get("units", ""),
                                "path": f"{e['name']}.raw", "encoding": "float32-le"})
            out = VolumeManifest(grid, entries, provenance={"downsample": p["downsample"]})
            out.save(pre_manifest)
        except PipelineError:
            raise
        except Exception as e:
            raise PipelineError("preprocess", e) from e
        runner.record("preprocess", key, p, [pre_manifest], skipped=False)
    artifacts["manifest"] = pre_manifest
    manifest = VolumeManifest.load(pre_manifest)
    up_key = key

    # decompose
    p = _stage_config(config, "decompose")
    field_names = p["fields"] or [e["name"] for e in manifest.fields]
    p = {**p, "fields": list(field_names)}
    key = _hash([p, up_key])
    dec_dir = runner.stage_dir("decompose")
    dec_outputs = [os.path.join(dec_dir, f"{n}.bands.json") for n in field_names]
    if runner.should_skip("decompose", key, dec_outputs):
        runner.record("decompose", key, p, dec_outputs, skipped=True)
    else:
        try:
            spec = ScaleBinSpec(tuple(p["bin_edges"]), p["include_j0"])
            for name in field_names:
                f = load_field(manifest, name)
                if p["method"] == "mirror":
                    dec = decompose_mirrored(f, spec, p["profile"], p["transition"])
                elif p["method"] == "blocked":
                    layout = BlockLayout(tuple(p["block_dims"]), p["overlap"], p["taper_width"])
                    dec = decompose_blocked(f, spec, layout, p["profile"], p["transition"])
                else:
                    bank = build_window_bank(f.grid, spec, p["profile"], p["transition"])
                    dec = decompose(f, bank)
                dec.save(dec_dir, name)
        except PipelineError:
            raise
        except Exception as e:
            raise PipelineError("decompose", e) from e
        runner.record("decompose", key, p, dec_outputs, skipped=False)
    artifacts["bands"] = {n: dec_dir for n in field_names}
    up_key = key

    # surface
    p = _stage_config(config, "surface")
    surf_name = p["name"] or f"{p['field']}_{p['isovalue']:g}"
    p = {**p, "name": surf_name}
    key = _hash([p, up_key])
    surf_dir = runner.stage_dir("surface")
    mesh_path = os.path.join(surf_dir, f"{surf_name}.mesh")
    if runner.should_skip("surface", key, [mesh_path]):
        runner.record("surface", key, p, [mesh_path], skipped=True)
    else:
        try:
            f = load_field(manifest, p["field"])
            mesh = extract_isosurface(f, float(p["isovalue"]))
            mesh.save(mesh_path)
        except Exception as e:
            raise PipelineError("surface", e) from e
        runner.record("surface", key, p, [mesh_path], skipped=False)
    artifacts["mesh"] = {surf_name: mesh_path}
    up_key = key

    # distance
    p = _stage_config(config, "distance")
    key = _hash([p, up_key])
    sdf_dir = runner.stage_dir("distance")
    sdf_path = os.path.join(sdf_dir, "sdf.raw")
    sdf_meta = os.path.join(sdf_dir, "sdf.json")
    if runner.should_skip("distance", key, [sdf_path, sdf_meta]):
        runner.record("distance", key, p, [sdf_path, sdf_meta], skipped=True)
    else:
        try:
            sp = _stage_config(config, "surface")
            f = load_field(manifest, sp["field"])
            mesh = TriangleMesh.load(mesh_path)
            dist = signed_distance_field(mesh, f, float(sp["isovalue"]), p["max_band"])
            dist.save(sdf_path, sdf_meta)
        except Exception as e:
            raise PipelineError("distance", e) from e
        runner.record("distance", key, p, [sdf_path, sdf_meta], skipped=False)
    artifacts["sdf"] = sdf_path
    up_key = key

    # tessellate
    p = _stage_config(config, "tessellate")
    key = _hash([p, up_key])
    tess_dir = runner.stage_dir("tessellate")
    tess_labels = os.path.join(tess_dir, "regions.raw")
    tess_table = os.path.join(tess_dir, "regions.json")
    if runner.should_skip("tessellate", key, [tess_labels, tess_table]):
        runner.record("tessellate", key, p, [tess_labels, tess_table], skipped=True)
    else:
        try:
            dist = DistanceField.load(sdf_path, sdf_meta)
            spec = BandSpec(tuple(p["isovalues"]), p["density"], p["seed"],
                            p["max_iters"], p["move_tolerance"])
            tess = tessellate(dist, spec)
            tess.save(tess_labels, tess_table)
        except Exception as e:
            raise PipelineError("tessellate", e) from e
        runner.record("tessellate", key, p, [tess_labels, tess_table], skipped=False)
    artifacts["tessellation"] = (tess_labels, tess_table)
    up_key = key

    # aggregate
    p = _stage_config(config, "aggregate")
    key = _hash([p, up_key])
    stats_dir = runner.stage_dir("aggregate")
    stats_bin = os.path.join(stats_dir, "stats.bin")
    stats_json = os.path.join(stats_dir, "stats.json")
    if runner.should_skip("aggregate", key, [stats_bin, stats_json]):
        runner.record("aggregate", key, p, [stats_bin, stats_json], skipped=True)
    else:
        try:
            tess = Tessellation.load(tess_labels, tess_table)
            merged = None
            for name in field_names:
                dec = BandDecomposition.load(dec_dir, name)
                st = aggregate_energy(dec, tess, p["mode"])
                merged = st if merged is None else merged.merge(st)
            merged.save(stats_bin, stats_json)
        except Exception as e:
            raise PipelineError("aggregate", e) from e
        runner.record("aggregate", key, p, [stats_bin, stats_json], skipped=False)
    artifacts["stats"] = (stats_bin, stats_json)
    up_key = key

    # pack: one glyph dataset per tessellation band, plus the scatter table
    p = _stage_config(config, "pack")
    key = _hash([p, up_key])
    pack_dir = runner.stage_dir("pack")
    tess = Tessellation.load(tess_labels, tess_table)
    bands = sorted({r.band for r in tess.regions})
    glyph_paths = {b: (os.path.join(pack_dir, f"band{b}.glyph"),
                       os.path.join(pack_dir, f"band{b}.glyph.json")) for b in bands}
    scatter_path = os.path.join(pack_dir, "scatter.json")
    pack_outputs = [q for pair in glyph_paths.values() for q in pair] + [scatter_path]
    if runner.should_skip("pack", key, pack_outputs):
        runner.record("pack", key, p, pack_outputs, skipped=True)
    else:
        try:
            stats = RegionStats.load(stats_bin, stats_json)
            spec = ScaleBinSpec(tuple(stats.bin_edges), stats.include_j0)
            L = spec.domain_length_for(manifest.grid)
            for b in bands:
                ds = pack_glyphs(tess, stats, p["field_order"], band=b, domain_length=L)
                ds.save(*glyph_paths[b])
            columns = {"band": np.array([r.band for r in tess.regions], dtype=float)}
            for li, fname in enumerate(stats.field_names):
                for k in range(stats.n_bins):
                    columns[f"{fname}:bin{k}"] = stats.values[:, li, k]
            for e in manifest.fields:
                f = load_field(manifest, e["name"])
                columns[f"{e['name']}:mean"] = region_means(f, tess)
            with open(scatter_path, "w") as fp:
                json.dump(scatter_samples(tess, columns), fp)
        except Exception as e:
            raise PipelineError("pack", e) from e
        runner.record("pack", key, p, pack_outputs, skipped=False)
    artifacts["glyphs"] = glyph_paths
    artifacts["scatter"] = scatter_path

    # catalog entry for the service
    catalog_path = os.path.join(out_dir, "catalog.json")
    dataset_id = config.get("dataset_id", "dataset")
    rel = lambda q: os.path.relpath(q, out_dir)
    with open(catalog_path, "w") as fp:
        json.dump({"datasets": {dataset_id: {
            "root": ".",
            "manifest": rel(pre_manifest),
            "glyphs": {str(b): [rel(a), rel(c)] for b, (a, c) in glyph_paths.items()},
            "meshes": {surf_name: rel(mesh_path)},
            "stats": [rel(stats_bin), rel(stats_json)],
            "scatter": rel(scatter_path),
            "summary": {"regions": tess.n_regions, "bands": bands,
                        "fields": field_names},
        }}}, fp, indent=2)
    artifacts["catalog"] = catalog_path

    with open(prov_path, "w") as fp:
        json.dump(runner.provenance, fp, indent=2)
    artifacts["provenance"] = prov_path
    return artifacts
