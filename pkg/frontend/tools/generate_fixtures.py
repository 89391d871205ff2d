"""Regenerate the viewer parity fixtures from the producing package.

The viewer must give the same answers as the producer for glyph fragment
classification, orientation, normalization, binary parsing, and lasso
selection. This script samples each of those through the installed
scaleglyph package and dumps the inputs plus expected outputs as JSON (and
raw binaries) into tests/fixtures/.

Near-boundary fragments are resampled away: trig functions may differ by an
ulp between runtimes, and the fixtures should test the logic, not libm.

Usage: python tools/generate_fixtures.py
"""

import json
import math
import os

import numpy as np

from scaleglyph.geometry import TriangleMesh
from scaleglyph.glyphpack import (GlyphDataset, NormalizationConfig, classify_starplot_fragment,
                                  classify_strength_fragment, normalization_range,
                                  orientation_matrix, starplot_axis_points, starplot_wedge_test)
from scaleglyph.service import lasso_select

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "..", "tests", "fixtures")

TWO_PI = 2.0 * math.pi


def _angular_margin(theta, M):
    t = theta * M / TWO_PI
    return abs(t - round(t))


def strength_vectors(rng, count=1000):
    out = []
    while len(out) < count:
        M = int(rng.integers(1, 9))
        N = int(rng.integers(1, 9))
        r = float(rng.uniform(0, 1.05))
        ang = float(rng.uniform(0, TWO_PI))
        p = [r * math.sin(ang), 0.0, r * math.cos(ang)]
        theta = math.atan2(p[0], p[2]) + math.pi
        if theta >= TWO_PI:
            theta -= TWO_PI
        # keep decisions away from cell boundaries
        if _angular_margin(theta, M) < 1e-6 or abs(r * N - round(r * N)) < 1e-6:
            continue
        l, k = classify_strength_fragment(p, M, N)
        out.append({"p": p, "M": M, "N": N, "l": l, "k": k})
    # pinned edge cases where the result is boundary-independent
    out.append({"p": [0.0, 0.0, 0.0], "M": 4, "N": 3,
                "l": list(classify_strength_fragment([0, 0, 0], 4, 3))[0], "k": 0})
    return out


def starplot_vectors(rng, count=1000):
    out = []
    while len(out) < count:
        M = int(rng.integers(3, 9))
        values = rng.uniform(0.05, 1.0, M).astype(np.float32).astype(np.float64)
        p = rng.uniform(-1, 1, 2)
        theta = math.atan2(p[1], p[0]) % TWO_PI
        if _angular_margin(theta, M) < 1e-6:
            continue
        l_a = min(M - 1, int(math.floor(theta * M / TWO_PI)))
        p_a, p_b = starplot_axis_points(l_a, M, values[l_a], values[(l_a + 1) % M])
        hyp = (p_b[0] - p_a[0]) * (p[1] - p_a[1]) - (p_b[1] - p_a[1]) * (p[0] - p_a[0])
        spoke_a = p_a[0] * p[1] - p_a[1] * p[0]
        spoke_b = p_b[0] * p[1] - p_b[1] * p[0]
        if min(abs(hyp), abs(spoke_a), abs(spoke_b)) < 1e-9:
            continue
        out.append({"p": [float(p[0]), float(p[1])], "values": [float(v) for v in values],
                    "inside": bool(classify_starplot_fragment(p, values))})
    out.append({"p": [0.0, 0.0], "values": [0.5, 0.5, 0.5], "inside": True})
    return out


def wedge_vectors(rng, count=200):
    out = []
    while len(out) < count:
        p_a = rng.uniform(-1, 1, 2)
        p_b = rng.uniform(-1, 1, 2)
        p = rng.uniform(-1, 1, 2)
        hyp = (p_b[0] - p_a[0]) * (p[1] - p_a[1]) - (p_b[1] - p_a[1]) * (p[0] - p_a[0])
        spoke_a = p_a[0] * p[1] - p_a[1] * p[0]
        spoke_b = p_b[0] * p[1] - p_b[1] * p[0]
        if min(abs(hyp), abs(spoke_a), abs(spoke_b)) < 1e-9:
            continue
        out.append({"p": p.tolist(), "pa": p_a.tolist(), "pb": p_b.tolist(),
                    "inside": bool(starplot_wedge_test(p, p_a, p_b))})
    return out


def orientation_vectors(rng, count=300):
    out = []
    for trial in range(count):
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        if trial % 5 == 0:
            u_view = u.copy()   # exactly parallel: exercises the fallback chain
        else:
            u_view = rng.standard_normal(3)
            u_view /= np.linalg.norm(u_view)
        r_view = np.cross(u_view, rng.standard_normal(3))
        r_view /= np.linalg.norm(r_view)
        f_view = np.cross(r_view, u_view)
        O = orientation_matrix(u, (r_view, u_view, f_view))
        out.append({"normal": u.tolist(), "rView": r_view.tolist(),
                    "uView": u_view.tolist(), "fView": f_view.tolist(),
                    "O": O.tolist()})
    return out


def _random_dataset(rng, band, R=6, M=3, N=4, zero_rows=0):
    vals = rng.uniform(0, 5, (R, M, N)).astype(np.float32).astype(np.float64)
    for z in range(zero_rows):
        vals[z % R, z % M, :] = 0.0
    pos = rng.uniform(0, 10, (R, 3)).astype(np.float32).astype(np.float64)
    nrm = np.tile([0.0, 1.0, 0.0], (R, 1))
    return GlyphDataset(band, np.arange(R), pos, nrm, vals.reshape(-1),
                        [f"f{l}" for l in range(M)], list(range(1, N + 2)),
                        [float(e) for e in range(1, N + 2)])


def normalization_vectors(rng):
    ds = [_random_dataset(rng, 0, zero_rows=2), _random_dataset(rng, 1)]
    configs = [
        {"spatial": "GSN", "bins": "GBN", "perGlyph": False, "allAxes": False,
         "zeroMin": False, "visibleBands": [], "visibleBins": [], "transform": "linear"},
        {"spatial": "LSN", "bins": "GBN", "perGlyph": False, "allAxes": False,
         "zeroMin": False, "visibleBands": [1], "visibleBins": [], "transform": "sqrt"},
        {"spatial": "GSN", "bins": "LBN", "perGlyph": False, "allAxes": False,
         "zeroMin": False, "visibleBands": [], "visibleBins": [1, 2], "transform": "log"},
        {"spatial": "LSN", "bins": "LBN", "perGlyph": True, "allAxes": False,
         "zeroMin": False, "visibleBands": [0], "visibleBins": [0], "transform": "linear"},
        {"spatial": "GSN", "bins": "GBN", "perGlyph": False, "allAxes": True,
         "zeroMin": True, "visibleBands": [], "visibleBins": [], "transform": "linear"},
        {"spatial": "GSN", "bins": "GBN", "perGlyph": True, "allAxes": False,
         "zeroMin": False, "visibleBands": [], "visibleBins": [], "transform": "sqrt"},
    ]
    cases = []
    for cfg in configs:
        res = normalization_range(ds, NormalizationConfig(
            spatial=cfg["spatial"], bins=cfg["bins"], per_glyph=cfg["perGlyph"],
            all_axes=cfg["allAxes"], zero_min=cfg["zeroMin"],
            visible_bands=tuple(cfg["visibleBands"]), visible_bins=tuple(cfg["visibleBins"]),
            transform=cfg["transform"]))
        cases.append({
            "config": cfg,
            "gamma": res.gamma.tolist(),
            "buffers": [b.reshape(-1).tolist() for b in res.buffers],
            "zeroFlagged": [f.reshape(-1).astype(int).tolist() for f in res.zero_flagged],
        })
    return {
        "datasets": [{
            "band": d.band,
            "regionIds": d.region_ids.tolist(),
            "fieldNames": d.field_names,
            "binEdges": d.bin_edges,
            "binLengths": d.bin_lengths,
            "positions": d.positions.reshape(-1).tolist(),
            "normals": d.normals.reshape(-1).tolist(),
            "buffer": d.buffer.tolist(),
        } for d in ds],
        "cases": cases,
    }


def selection_vectors(rng, n_points=1000):
    ids = list(range(n_points))
    xs = rng.uniform(-2, 2, n_points)
    ys = rng.uniform(-2, 2, n_points)
    polygons = []
    for _ in range(5):
        angles = np.sort(rng.uniform(0, TWO_PI, int(rng.integers(5, 12))))
        radii = rng.uniform(0.5, 2.0, len(angles))
        polygons.append([[float(r * math.cos(a)), float(r * math.sin(a))]
                         for r, a in zip(radii, angles)])
    cases = [{"polygon": poly,
              "regionIds": lasso_select(poly, ids, xs, ys)} for poly in polygons]
    cases.append({"polygon": [[0, 0], [1, 1], [2, 2]], "regionIds": []})  # degenerate
    return {"ids": ids, "xs": xs.tolist(), "ys": ys.tolist(), "cases": cases}


def binary_fixtures(rng):
    ds = _random_dataset(rng, 2, R=5, M=2, N=3)
    ds.save(os.path.join(FIXTURES, "glyphs.bin"), os.path.join(FIXTURES, "glyphs.json"))
    samples = [{"i": i, "l": l, "k": k, "v": ds.value(i, l, k)}
               for i in range(ds.n_regions) for l in range(2) for k in range(3)]
    with open(os.path.join(FIXTURES, "glyphs_expected.json"), "w") as fp:
        json.dump({"band": ds.band, "R": ds.n_regions, "M": ds.n_fields, "N": ds.n_bins,
                   "positions": ds.positions.reshape(-1).tolist(),
                   "normals": ds.normals.reshape(-1).tolist(),
                   "samples": samples}, fp)

    verts = rng.uniform(0, 10, (9, 3)).astype(np.float32).astype(np.float64)
    tris = np.arange(9).reshape(3, 3)
    norms = np.tile([0.0, 0.0, 1.0], (9, 1))
    mesh = TriangleMesh(verts, tris, norms)
    mesh.save(os.path.join(FIXTURES, "mesh.bin"))
    with open(os.path.join(FIXTURES, "mesh_expected.json"), "w") as fp:
        json.dump({"vertices": verts.reshape(-1).tolist(),
                   "normals": norms.reshape(-1).tolist(),
                   "triangles": tris.reshape(-1).tolist()}, fp)


def main():
    os.makedirs(FIXTURES, exist_ok=True)
    rng = np.random.default_rng(12345)
    with open(os.path.join(FIXTURES, "classification_vectors.json"), "w") as fp:
        json.dump({"strength": strength_vectors(rng),
                   "starplot": starplot_vectors(rng),
                   "wedge": wedge_vectors(rng)}, fp)
    with open(os.path.join(FIXTURES, "orientation_vectors.json"), "w") as fp:
        json.dump(orientation_vectors(rng), fp)
    with open(os.path.join(FIXTURES, "normalization_vectors.json"), "w") as fp:
        json.dump(normalization_vectors(rng), fp)
    with open(os.path.join(FIXTURES, "selection_vectors.json"), "w") as fp:
        json.dump(selection_vectors(rng), fp)
    binary_fixtures(rng)
    print(f"fixtures written to {os.path.normpath(FIXTURES)}")


if __name__ == "__main__":
    main()
