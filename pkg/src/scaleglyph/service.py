"""Dataset catalog and HTTP query service.

A catalog maps dataset ids to pipeline artifact directories. The service
exposes read-only endpoints that hand the viewer manifests, glyph buffers,
meshes, and scatter tables, plus a selection endpoint that evaluates lasso
polygons server-side so the client never needs raw volumes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel


class ServiceError(ValueError):
    pass


@dataclass
class DatasetEntry:
    """Artifact paths for one packed dataset, all relative to root."""

    root: str
    manifest_path: str
    glyphs: dict[int, tuple[str, str]]       # band -> (binary, sidecar)
    meshes: dict[str, str]                   # surface name -> mesh file
    stats: tuple[str, str] | None            # (binary, sidecar)
    scatter_path: str | None
    summary: dict = field(default_factory=dict)

    def _abs(self, p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(self.root, p)

    def read_bytes(self, p: str) -> bytes:
        with open(self._abs(p), "rb") as fp:
            return fp.read()

    def read_json(self, p: str) -> dict:
        with open(self._abs(p)) as fp:
            return json.load(fp)


@dataclass
class DatasetCatalog:
    datasets: dict[str, DatasetEntry] = field(default_factory=dict)

    def add(self, dataset_id: str, entry: DatasetEntry):
        self.datasets[dataset_id] = entry

    def get(self, dataset_id: str) -> DatasetEntry:
        if dataset_id not in self.datasets:
            raise KeyError(dataset_id)
        return self.datasets[dataset_id]

    def validate(self):
        for did, e in self.datasets.items():
            paths = [e.manifest_path, *(p for pair in e.glyphs.values() for p in pair),
                     *e.meshes.values()]
            if e.stats:
                paths += list(e.stats)
            if e.scatter_path:
                paths.append(e.scatter_path)
            for p in paths:
                if not os.path.exists(e._abs(p)):
                    raise ServiceError(f"dataset {did!r}: missing artifact {p}")

    @classmethod
    def load(cls, path) -> "DatasetCatalog":
        """Catalog file: {"datasets": {id: entry dict}}; paths relative to it."""
        with open(path) as fp:
            doc = json.load(fp)
        root = os.path.dirname(os.path.abspath(path))
        cat = cls()
        for did, d in doc.get("datasets", {}).items():
            entry_root = os.path.join(root, d.get("root", "."))
            cat.add(did, DatasetEntry(
                root=entry_root,
                manifest_path=d["manifest"],
                glyphs={int(k): tuple(v) for k, v in d.get("glyphs", {}).items()},
                meshes=dict(d.get("meshes", {})),
                stats=tuple(d["stats"]) if d.get("stats") else None,
                scatter_path=d.get("scatter"),
                summary=d.get("summary", {}),
            ))
        cat.validate()
        return cat


def _on_segment(p, a, b, eps=1e-12) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if abs(cross) > eps * max(1.0, abs(b[0] - a[0]) + abs(b[1] - a[1])):
        return False
    dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
    return -eps <= dot <= (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + eps


def point_in_polygon(p, polygon) -> bool:
    """Even-odd (ray casting) test; points on the boundary count as inside."""
    n = len(polygon)
    inside = False
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        if _on_segment(p, a, b):
            return True
        if (a[1] > p[1]) != (b[1] > p[1]):
            xi = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if p[0] < xi:
                inside = not inside
    return inside


def _polygon_area(polygon) -> float:
    poly = np.asarray(polygon, dtype=np.float64)
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def lasso_select(polygon, region_ids, xs, ys) -> list[int]:
    """Region ids whose (x, y) scatter point falls inside the lasso polygon,
    sorted ascending. Degenerate (zero-area) polygons select nothing."""
    if len(polygon) < 3:
        raise ServiceError("lasso polygon needs at least 3 vertices")
    if _polygon_area(polygon) == 0.0:
        return []
    out = [int(rid) for rid, x, y in zip(region_ids, xs, ys)
           if point_in_polygon((float(x), float(y)), polygon)]
    return sorted(out)


class SelectionQuery(BaseModel):
    x: str
    y: str
    polygon: list[list[float]]


def _scatter_columns(entry: DatasetEntry):
    if not entry.scatter_path:
        raise HTTPException(status_code=404, detail="dataset has no scatter table")
    doc = entry.read_json(entry.scatter_path)
    return doc["columns"], doc["rows"]


def create_app(catalog: DatasetCatalog) -> FastAPI:
    app = FastAPI(title="scaleglyph service")

    def entry(dataset_id: str) -> DatasetEntry:
        try:
            return catalog.get(dataset_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown dataset {dataset_id!r}")

    @app.get("/datasets")
    def list_datasets():
        return [{"id": did, "bands": sorted(e.glyphs), "surfaces": sorted(e.meshes),
                 "summary": e.summary} for did, e in sorted(catalog.datasets.items())]

    @app.get("/datasets/{dataset_id}/manifest")
    def manifest(dataset_id: str):
        return JSONResponse(entry(dataset_id).read_json(entry(dataset_id).manifest_path))

    @app.get("/datasets/{dataset_id}/glyphs")
    def glyphs(dataset_id: str, band: int = 0, sidecar: bool = False):
        e = entry(dataset_id)
        if band not in e.glyphs:
            raise HTTPException(status_code=404, detail=f"no glyph data for band {band}")
        binary, meta = e.glyphs[band]
        if sidecar:
            return JSONResponse(e.read_json(meta))
        return Response(e.read_bytes(binary), media_type="application/octet-stream")

    @app.get("/datasets/{dataset_id}/mesh")
    def mesh(dataset_id: str, surface: str):
        e = entry(dataset_id)
        if surface not in e.meshes:
            raise HTTPException(status_code=404, detail=f"unknown surface {surface!r}")
        return Response(e.read_bytes(e.meshes[surface]), media_type="application/octet-stream")

    @app.get("/datasets/{dataset_id}/scatter")
    def scatter(dataset_id: str, x: str, y: str):
        cols, rows = _scatter_columns(entry(dataset_id))
        for c in (x, y):
            if c not in cols:
                raise HTTPException(status_code=400, detail=f"unknown scatter column {c!r}")
        xi, yi = cols.index(x), cols.index(y)
        ri = cols.index("region_id")
        return {"x": x, "y": y,
                "rows": [[r[ri], r[xi], r[yi]] for r in rows]}

    @app.post("/datasets/{dataset_id}/select")
    def select(dataset_id: str, query: SelectionQuery):
        cols, rows = _scatter_columns(entry(dataset_id))
        for c in (query.x, query.y):
            if c not in cols:
                raise HTTPException(status_code=400, detail=f"unknown scatter column {c!r}")
        if len(query.polygon) < 3:
            raise HTTPException(status_code=400, detail="polygon needs at least 3 vertices")
        xi, yi = cols.index(query.x), cols.index(query.y)
        ri = cols.index("region_id")
        ids = lasso_select(query.polygon, [r[ri] for r in rows],
                           [r[xi] for r in rows], [r[yi] for r in rows])
        return {"region_ids": ids}

    return app


def serve(catalog: DatasetCatalog, host: str = "127.0.0.1", port: int = 8077):
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(catalog), host=host, port=port)
