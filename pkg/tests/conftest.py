import numpy as np
import pytest

from scaleglyph.core import Grid3, ScalarField
from scaleglyph.geometry import extract_isosurface, signed_distance_field
from scaleglyph.lsrcvt import BandSpec, tessellate


@pytest.fixture
def sphere_field():
    """16^3 radial field around the grid center."""
    n = 16
    g = Grid3((n, n, n))
    ii, jj, kk = np.meshgrid(*[np.arange(n)] * 3, indexing="ij")
    r = np.sqrt((ii - 7.5) ** 2 + (jj - 7.5) ** 2 + (kk - 7.5) ** 2)
    return ScalarField(g, "r", r)


@pytest.fixture
def sphere_tessellation(sphere_field):
    mesh = extract_isosurface(sphere_field, 5.0)
    dist = signed_distance_field(mesh, sphere_field, 5.0, max_band=4.0)
    tess = tessellate(dist, BandSpec((-2.0, 0.0, 2.0), density=0.05, seed=42))
    return dist, tess


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and getattr(rep, "when", "call") == "call":
                rows.append((nodeid.split("::")[-1], outcome == "passed"))
    if rows:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, ok in rows:
            terminalreporter.write_line(f"  {'PASS' if ok else 'FAIL'}  {name}")
