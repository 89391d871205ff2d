"""Command-line interface.

Each subcommand wraps one pipeline stage and operates on the same artifact
files; ``pipeline`` runs everything from a JSON config with resumability.
Exit codes: 0 on success, 1 + stage index (see pipeline.STAGES) when a stage
fails, 1 for other errors.
"""

from __future__ import annotations

import json
import sys

import click

from .core import BlockLayout, VolumeManifest, downsample, load_field
from .geometry import DistanceField, TriangleMesh, extract_isosurface, signed_distance_field
from .lsrcvt import BandSpec, Tessellation, tessellate
from .pipeline import STAGES, PipelineError, run_pipeline
from .specfilter import (BandDecomposition, ScaleBinSpec, build_window_bank, decompose,
                         decompose_blocked, decompose_mirrored)
from .stats import RegionStats, aggregate_energy


def _triple(ctx, param, value):
    if value is None:
        return None
    parts = [int(v) for v in value.split(",")]
    return tuple(parts) if len(parts) == 3 else (parts[0],) * 3


def _ints(ctx, param, value):
    return tuple(int(v) for v in value.split(",")) if value else None


def _floats(ctx, param, value):
    return tuple(float(v) for v in value.split(",")) if value else None


@click.group()
def main():
    """Scale-decomposed surface glyph pipeline."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--output-dir", required=True, type=click.Path())
@click.option("--downsample", "factor", default=1, show_default=True)
def preprocess(manifest, output_dir, factor):
    """Downsample manifest fields and write a new manifest."""
    import os

    src = VolumeManifest.load(manifest)
    os.makedirs(output_dir, exist_ok=True)
    entries, grid = [], None
    for e in src.fields:
        f = downsample(load_field(src, e["name"]), factor)
        f.save_raw(os.path.join(output_dir, f"{e['name']}.raw"))
        grid = f.grid
        entries.append({"name": e["name"], "units": e.get("units", ""),
                        "path": f"{e['name']}.raw", "encoding": "float32-le"})
    VolumeManifest(grid, entries, {"downsample": factor}).save(
        os.path.join(output_dir, "manifest.json"))
    click.echo(f"wrote {len(entries)} fields at {grid.dims}")


@main.command("decompose")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--output-dir", required=True, type=click.Path())
@click.option("--field", "fields", multiple=True)
@click.option("--bin-edges", required=True, callback=_ints)
@click.option("--include-j0/--no-include-j0", default=True, show_default=True)
@click.option("--method", type=click.Choice(["plain", "mirror", "blocked"]), default="plain")
@click.option("--profile", default="concentric-square", show_default=True)
@click.option("--transition", default=1.0 / 3.0, show_default=True)
@click.option("--block-dims", callback=_triple, default=None)
@click.option("--overlap", callback=_triple, default=None)
@click.option("--taper-width", callback=_triple, default=None)
def decompose_cmd(manifest, output_dir, fields, bin_edges, include_j0, method,
                  profile, transition, block_dims, overlap, taper_width):
    """Scale-decompose manifest fields into band files."""
    man = VolumeManifest.load(manifest)
    names = list(fields) or [e["name"] for e in man.fields]
    spec = ScaleBinSpec(bin_edges, include_j0)
    for name in names:
        f = load_field(man, name)
        if method == "mirror":
            dec = decompose_mirrored(f, spec, profile, transition)
        elif method == "blocked":
            layout = BlockLayout(block_dims, overlap or 0, taper_width or 0)
            dec = decompose_blocked(f, spec, layout, profile, transition)
        else:
            dec = decompose(f, build_window_bank(f.grid, spec, profile, transition))
        dec.save(output_dir, name)
        click.echo(f"{name}: {dec.n_bins} bands, energy {sum(dec.band_energy):.6g}")


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--field", required=True)
@click.option("--isovalue", required=True, type=float)
@click.option("--mesh-out", required=True, type=click.Path())
@click.option("--sdf-out", type=click.Path(), default=None,
              help="Also compute the signed distance field (raw + json).")
@click.option("--max-band", type=float, default=None)
def surface(manifest, field, isovalue, mesh_out, sdf_out, max_band):
    """Extract the feature isosurface (and optionally its distance field)."""
    man = VolumeManifest.load(manifest)
    f = load_field(man, field)
    mesh = extract_isosurface(f, isovalue)
    mesh.save(mesh_out)
    click.echo(f"mesh: {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles")
    if sdf_out:
        dist = signed_distance_field(mesh, f, isovalue, max_band)
        dist.save(sdf_out, sdf_out + ".json")
        click.echo(f"sdf range: [{dist.values.min():.4g}, {dist.values.max():.4g}]")


@main.command("tessellate")
@click.option("--sdf", required=True, type=click.Path(exists=True))
@click.option("--sdf-meta", required=True, type=click.Path(exists=True))
@click.option("--isovalues", required=True, callback=_floats)
@click.option("--density", default=0.015, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--max-iters", default=50, show_default=True)
@click.option("--move-tolerance", default=0.5, show_default=True)
@click.option("--labels-out", required=True, type=click.Path())
@click.option("--table-out", required=True, type=click.Path())
def tessellate_cmd(sdf, sdf_meta, isovalues, density, seed, max_iters,
                   move_tolerance, labels_out, table_out):
    """Tessellate distance bands into centroidal Voronoi regions."""
    dist = DistanceField.load(sdf, sdf_meta)
    spec = BandSpec(isovalues, density, seed, max_iters, move_tolerance)
    tess = tessellate(dist, spec)
    tess.save(labels_out, table_out)
    click.echo(f"{tess.n_regions} regions")


@main.command("aggregate")
@click.option("--bands-dir", required=True, type=click.Path(exists=True))
@click.option("--field", "fields", multiple=True, required=True)
@click.option("--labels", required=True, type=click.Path(exists=True))
@click.option("--table", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["squared", "norm"]), default="squared")
@click.option("--stats-out", required=True, type=click.Path())
@click.option("--sidecar-out", required=True, type=click.Path())
def aggregate_cmd(bands_dir, fields, labels, table, mode, stats_out, sidecar_out):
    """Aggregate band energy over tessellation regions."""
    tess = Tessellation.load(labels, table)
    merged = None
    for name in fields:
        st = aggregate_energy(BandDecomposition.load(bands_dir, name), tess, mode)
        merged = st if merged is None else merged.merge(st)
    merged.save(stats_out, sidecar_out)
    click.echo(f"stats: {merged.n_regions} regions x {merged.n_fields} fields x {merged.n_bins} bins")


@main.command("pack")
@click.option("--labels", required=True, type=click.Path(exists=True))
@click.option("--table", required=True, type=click.Path(exists=True))
@click.option("--stats", required=True, type=click.Path(exists=True))
@click.option("--sidecar", required=True, type=click.Path(exists=True))
@click.option("--band", type=int, default=None)
@click.option("--field", "fields", multiple=True)
@click.option("--out", required=True, type=click.Path())
def pack_cmd(labels, table, stats, sidecar, band, fields, out):
    """Pack one band's glyph dataset."""
    from .glyphpack import pack_glyphs

    tess = Tessellation.load(labels, table)
    st = RegionStats.load(stats, sidecar)
    ds = pack_glyphs(tess, st, list(fields) or None, band=band)
    ds.save(out, out + ".json")
    click.echo(f"band {ds.band}: {ds.n_regions} glyphs, buffer {len(ds.buffer)}")


@main.command("serve")
@click.option("--catalog", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8077, show_default=True)
def serve_cmd(catalog, host, port):
    """Serve packed datasets over HTTP."""
    from .service import DatasetCatalog, serve

    serve(DatasetCatalog.load(catalog), host, port)


@main.command("pipeline")
@click.option("--config", required=True, type=click.Path(exists=True))
def pipeline_cmd(config):
    """Run the full pipeline from a JSON config."""
    with open(config) as fp:
        cfg = json.load(fp)
    log: list = []
    try:
        artifacts = run_pipeline(cfg, log)
    except PipelineError as e:
        click.echo(str(e), err=True)
        sys.exit(1 + STAGES.index(e.stage) if e.stage in STAGES else 1)
    for stage, what in log:
        click.echo(f"{stage}: {what}")
    click.echo(f"catalog: {artifacts['catalog']}")


if __name__ == "__main__":
    main()
