import hashlib
import json
import os
import shutil

import numpy as np
import pytest

from scaleglyph.core import Grid3, ScalarField, VolumeManifest
from scaleglyph.glyphpack import GlyphDataset
from scaleglyph.lsrcvt import Tessellation
from scaleglyph.pipeline import PipelineError, run_pipeline
from scaleglyph.stats import RegionStats


def _make_inputs(root, n=24):
    g = Grid3((n, n, n))
    ii, jj, kk = np.meshgrid(*[np.arange(n)] * 3, indexing="ij")
    r = np.sqrt((ii - n / 2 + 0.5) ** 2 + (jj - n / 2 + 0.5) ** 2 + (kk - n / 2 + 0.5) ** 2)
    t = ScalarField(g, "temp", 100.0 - 8.0 * r)
    rng = np.random.default_rng(9)
    u = ScalarField(g, "u", np.sin(2 * np.pi * 2 * ii / n) + 0.1 * rng.standard_normal(g.dims))
    os.makedirs(root, exist_ok=True)
    t.save_raw(os.path.join(root, "temp.raw"))
    u.save_raw(os.path.join(root, "u.raw"))
    man = VolumeManifest(g, [{"name": "temp", "path": "temp.raw"},
                             {"name": "u", "path": "u.raw"}])
    man.save(os.path.join(root, "manifest.json"))
    return os.path.join(root, "manifest.json")


def _config(manifest, out):
    return {
        "manifest": manifest,
        "output_dir": out,
        "dataset_id": "demo",
        "decompose": {"bin_edges": [1, 2, 3], "method": "mirror"},
        "surface": {"field": "temp", "isovalue": 40.0},
        "distance": {"max_band": 5.0},
        "tessellate": {"isovalues": [-3.0, 0.0, 3.0], "density": 0.03, "seed": 2},
    }


def _tree_hashes(root):
    out = {}
    for d, _, files in os.walk(root):
        for f in files:
            p = os.path.join(d, f)
            with open(p, "rb") as fp:
                out[os.path.relpath(p, root)] = hashlib.sha256(fp.read()).hexdigest()
    return out


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipe")
    manifest = _make_inputs(root / "in")
    cfg = _config(manifest, str(root / "out"))
    log = []
    art = run_pipeline(cfg, log)
    return root, cfg, art, log


def test_all_stages_run_once(run_dir):
    _, _, _, log = run_dir
    assert [w for _, w in log] == ["ran"] * 7


def test_artifacts_loadable(run_dir):
    _, _, art, _ = run_dir
    tess = Tessellation.load(*art["tessellation"])
    assert tess.n_regions > 0
    stats = RegionStats.load(*art["stats"])
    assert stats.n_regions == tess.n_regions
    assert stats.field_names == ["temp", "u"]
    for band, (binp, meta) in art["glyphs"].items():
        ds = GlyphDataset.load(binp, meta)
        assert ds.band == band
        assert ds.n_fields == 2
    with open(art["scatter"]) as fp:
        sc = json.load(fp)
    assert len(sc["rows"]) == tess.n_regions


def test_rerun_skips_everything(run_dir):
    _, cfg, _, _ = run_dir
    log = []
    run_pipeline(cfg, log)
    assert [w for _, w in log] == ["skipped"] * 7


def test_changed_stage_reruns_downstream(run_dir):
    root, cfg, _, _ = run_dir
    cfg2 = json.loads(json.dumps(cfg))
    cfg2["tessellate"]["seed"] = 3
    log = []
    run_pipeline(cfg2, log)
    stages = dict(log)
    assert stages["preprocess"] == "skipped"
    assert stages["decompose"] == "skipped"
    assert stages["tessellate"] == "ran"
    assert stages["aggregate"] == "ran"
    assert stages["pack"] == "ran"
    # restore the original outputs for other tests
    log = []
    run_pipeline(cfg, log)
    assert dict(log)["tessellate"] == "ran"


def test_pipeline_deterministic(run_dir, tmp_path):
    root, cfg, _, _ = run_dir
    cfg_a = dict(cfg, output_dir=str(tmp_path / "a"))
    cfg_b = dict(cfg, output_dir=str(tmp_path / "b"))
    run_pipeline(cfg_a)
    run_pipeline(cfg_b)
    assert _tree_hashes(tmp_path / "a") == _tree_hashes(tmp_path / "b")


def test_provenance_records_defaults(run_dir):
    root, _, art, _ = run_dir
    with open(art["provenance"]) as fp:
        prov = json.load(fp)
    tess_params = prov["stages"]["tessellate"]["params"]
    # defaults written back, not silent
    assert tess_params["max_iters"] == 50
    assert tess_params["move_tolerance"] == 0.5
    assert prov["stages"]["aggregate"]["params"]["mode"] == "squared"


def test_stage_error_names_stage(tmp_path):
    manifest = _make_inputs(tmp_path / "in")
    cfg = _config(manifest, str(tmp_path / "out"))
    cfg["decompose"]["bin_edges"] = [1, 99]  # far beyond max scale
    with pytest.raises(PipelineError, match="decompose"):
        run_pipeline(cfg)
