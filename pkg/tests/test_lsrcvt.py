import numpy as np
import pytest

from scaleglyph.core import Grid3
from scaleglyph.geometry import DistanceField
from scaleglyph.lsrcvt import (UNLABELED, BandSpec, Tessellation, TessellationError,
                               connected_components, form_bands, seed_sites, tessellate)


def _dist(values, spacing=(1.0, 1.0, 1.0)):
    values = np.asarray(values, dtype=np.float64)
    return DistanceField(Grid3(values.shape, spacing), values)


def _random_dist(rng, n):
    vals = rng.uniform(-3, 3, size=(n, n, n))
    # smooth a little so bands have some structure
    from scipy import ndimage
    return _dist(ndimage.uniform_filter(vals, 3))


def test_band_spec_validation():
    with pytest.raises(TessellationError):
        BandSpec((1.0,))
    with pytest.raises(TessellationError):
        BandSpec((2.0, 1.0))
    with pytest.raises(TessellationError):
        BandSpec((0.0, 1.0), density=0.0)


def test_form_bands_half_open():
    d = _dist(np.linspace(-2, 2, 64).reshape(4, 4, 4))
    lab = form_bands(d, (-1.0, 0.0, 1.0))
    phi = d.values
    assert (lab[(phi >= -1) & (phi < 0)] == 0).all()
    assert (lab[(phi >= 0) & (phi < 1)] == 1).all()
    assert (lab[phi >= 1] == UNLABELED).all()
    assert (lab[phi < -1] == UNLABELED).all()


def test_connected_components_six_connectivity():
    lab = np.full((3, 3, 3), UNLABELED, dtype=np.int32)
    lab[0, 0, 0] = 0
    lab[1, 1, 1] = 0  # only diagonally adjacent: separate components
    comp = connected_components(lab)
    assert comp[0, 0, 0] != comp[1, 1, 1]
    assert comp[0, 0, 0] != UNLABELED and comp[1, 1, 1] != UNLABELED
    lab[1, 0, 0] = 0
    lab[1, 1, 0] = 0  # face-connected chain now joins them
    comp = connected_components(lab)
    assert comp[0, 0, 0] == comp[1, 1, 1]


def test_component_ids_globally_unique_across_bands():
    lab = np.full((4, 4, 4), UNLABELED, dtype=np.int32)
    lab[:2] = 0
    lab[2:] = 1
    comp = connected_components(lab)
    assert set(np.unique(comp)) == {0, 1}


def test_seed_count_formula():
    vox = np.arange(200).reshape(-1, 1) * np.array([[1, 0, 0]])
    assert len(seed_sites(vox, 0.015, 0)) == 3   # round(3.0)
    assert len(seed_sites(vox, 0.001, 0)) == 1   # max(1, .)
    assert len(seed_sites(vox[:10], 1.0, 0)) == 10
    s1 = seed_sites(vox, 0.05, 7)
    s2 = seed_sites(vox, 0.05, 7)
    assert np.array_equal(s1, s2)
    assert len(np.unique(s1[:, 0])) == len(s1)  # distinct


def test_tessellation_partitions_bands(sphere_tessellation):
    dist, tess = sphere_tessellation
    in_band = tess.band_label >= 0
    assert ((tess.region_label >= 0) == in_band).all()
    counts = np.bincount(tess.region_label[in_band], minlength=tess.n_regions)
    assert (counts > 0).all()
    assert counts.sum() == in_band.sum()
    for r in tess.regions:
        assert r.voxel_count == counts[r.id]


def test_regions_restricted_to_components(sphere_tessellation):
    _, tess = sphere_tessellation
    for r in tess.regions:
        comp_of_region = tess.component_label[tess.region_label == r.id]
        assert (comp_of_region == r.component).all()


def test_sites_inside_their_regions(sphere_tessellation):
    _, tess = sphere_tessellation
    for r in tess.regions:
        assert tess.region_label[r.site_voxel] == r.id


def test_determinism_byte_identical(sphere_tessellation, tmp_path):
    dist, tess = sphere_tessellation
    spec = tess.spec
    t2 = tessellate(dist, spec)
    assert np.array_equal(tess.region_label, t2.region_label)
    tess.save(tmp_path / "a.raw", tmp_path / "a.json")
    t2.save(tmp_path / "b.raw", tmp_path / "b.json")
    assert (tmp_path / "a.raw").read_bytes() == (tmp_path / "b.raw").read_bytes()
    assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()


def test_seed_changes_result(sphere_tessellation):
    dist, tess = sphere_tessellation
    other = tessellate(dist, BandSpec(tess.spec.isovalues, tess.spec.density, seed=99))
    assert not np.array_equal(tess.region_label, other.region_label)


def test_lloyd_energy_monotone():
    rng = np.random.default_rng(0)
    for trial in range(4):
        dist = _random_dist(rng, 10)
        log = []
        tessellate(dist, BandSpec((-1.0, 0.0, 1.0), density=0.05,
                                  seed=int(rng.integers(1e6))), energy_log=log)
        per_comp = {}
        for cid, e, reseeded in log:
            if cid in per_comp and not reseeded:
                assert e <= per_comp[cid] + 1e-9
            per_comp[cid] = e


def test_assignment_matches_brute_force_voronoi():
    rng = np.random.default_rng(1)
    dist = _random_dist(rng, 8)
    tess = tessellate(dist, BandSpec((-1.0, 0.0, 1.0), density=0.1, seed=5))
    sites = {r.id: (np.array(r.site), r.component) for r in tess.regions}
    it = np.nditer(tess.region_label, flags=["multi_index"])
    for rid in it:
        rid = int(rid)
        if rid == UNLABELED:
            continue
        v = np.array(it.multi_index, dtype=float)
        comp = tess.component_label[it.multi_index]
        d_own = np.sum((v - sites[rid][0]) ** 2)
        for other, (s, c) in sites.items():
            if c != comp:
                continue
            d_other = np.sum((v - s) ** 2)
            if other < rid:
                assert d_other > d_own - 1e-12  # ties go to the lowest id
            else:
                assert d_other >= d_own - 1e-12


def test_save_load_roundtrip(sphere_tessellation, tmp_path):
    _, tess = sphere_tessellation
    tess.save(tmp_path / "r.raw", tmp_path / "r.json")
    back = Tessellation.load(tmp_path / "r.raw", tmp_path / "r.json")
    assert back.n_regions == tess.n_regions
    assert np.array_equal(back.region_label, tess.region_label)
    assert np.array_equal(back.band_label, tess.band_label)
    assert back.spec == tess.spec
    for a, b in zip(tess.regions, back.regions):
        assert a.id == b.id and a.voxel_count == b.voxel_count
        assert np.allclose(a.site, b.site)


def test_region_ids_dense(sphere_tessellation):
    _, tess = sphere_tessellation
    assert [r.id for r in tess.regions] == list(range(tess.n_regions))


def test_normals_unit(sphere_tessellation):
    _, tess = sphere_tessellation
    for r in tess.regions:
        assert np.linalg.norm(r.normal) == pytest.approx(1.0, abs=1e-6)
