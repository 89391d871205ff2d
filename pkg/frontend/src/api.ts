/**
 * Typed client for the glyph service. The viewer depends on these endpoints
 * only; it never touches raw volumes.
 */

import { GlyphDataset, GlyphMeta, parseGlyphDataset } from "./glyphData";
import { parseMesh, SurfaceMesh } from "./meshData";
import { Point } from "./selection";

export interface DatasetSummary {
  id: string;
  bands: number[];
  fields: string[];
  surfaces: string[];
}

export interface ScatterTable {
  x: string;
  y: string;
  rows: Array<[number, number, number]>; // (region id, x, y)
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get(path: string): Promise<Response> {
    const r = await this.fetchImpl(this.baseUrl + path);
    if (!r.ok) throw new ServiceError(r.status, `GET ${path} -> ${r.status}`);
    return r;
  }

  async listDatasets(): Promise<DatasetSummary[]> {
    return (await this.get("/datasets")).json();
  }

  async fetchManifest(id: string): Promise<unknown> {
    return (await this.get(`/datasets/${id}/manifest`)).json();
  }

  async fetchGlyphs(id: string, band: number): Promise<GlyphDataset> {
    const meta: GlyphMeta = await (
      await this.get(`/datasets/${id}/glyphs?band=${band}&sidecar=true`)
    ).json();
    const bytes = await (await this.get(`/datasets/${id}/glyphs?band=${band}`)).arrayBuffer();
    return parseGlyphDataset(bytes, meta);
  }

  async fetchMesh(id: string, surface: string): Promise<SurfaceMesh> {
    const bytes = await (
      await this.get(`/datasets/${id}/mesh?surface=${encodeURIComponent(surface)}`)
    ).arrayBuffer();
    return parseMesh(bytes);
  }

  async fetchScatter(id: string, x: string, y: string): Promise<ScatterTable> {
    return (await this.get(
      `/datasets/${id}/scatter?x=${encodeURIComponent(x)}&y=${encodeURIComponent(y)}`,
    )).json();
  }

  /** POST the lasso to the service; returns the selected region ids, sorted. */
  async select(id: string, x: string, y: string, polygon: Point[]): Promise<number[]> {
    const r = await this.fetchImpl(`${this.baseUrl}/datasets/${id}/select`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ x, y, polygon }),
    });
    if (!r.ok) throw new ServiceError(r.status, `POST select -> ${r.status}`);
    const body = await r.json();
    return body.region_ids;
  }
}
