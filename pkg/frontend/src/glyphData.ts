/**
 * Binary glyph dataset parsing.
 *
 * Layout: magic "SGLY"; little-endian u32 version, u32 R, u32 M, u32 N,
 * i32 band; R x 3 f32 positions; R x 3 f32 normals; R*M*N f32 statistics in
 * statIndex order. Metadata travels in a JSON sidecar.
 */

import { statIndex } from "./glyphMath";

export interface GlyphMeta {
  band: number;
  region_ids: number[];
  field_names: string[];
  bin_edges: number[];
  bin_lengths: number[];
  defaults?: Record<string, unknown>;
}

export class GlyphParseError extends Error {}

export class GlyphDataset {
  constructor(
    readonly band: number,
    readonly regionIds: Int32Array,
    readonly positions: Float32Array, // (R*3)
    readonly normals: Float32Array,   // (R*3)
    readonly buffer: Float32Array,    // (R*M*N)
    readonly fieldNames: string[],
    readonly binEdges: number[],
    readonly binLengths: number[],
  ) {
    const R = regionIds.length;
    if (positions.length !== 3 * R || normals.length !== 3 * R) {
      throw new GlyphParseError("positions/normals length must equal region count");
    }
    if (buffer.length !== R * this.nFields * this.nBins) {
      throw new GlyphParseError(
        `buffer length ${buffer.length} != R*M*N = ${R * this.nFields * this.nBins}`,
      );
    }
  }

  get nRegions(): number {
    return this.regionIds.length;
  }

  get nFields(): number {
    return this.fieldNames.length;
  }

  get nBins(): number {
    return this.binEdges.length - 1;
  }

  value(i: number, l: number, k: number): number {
    return this.buffer[statIndex(i, l, k, this.nFields, this.nBins)];
  }

  position(i: number): [number, number, number] {
    return [this.positions[3 * i], this.positions[3 * i + 1], this.positions[3 * i + 2]];
  }

  normal(i: number): [number, number, number] {
    return [this.normals[3 * i], this.normals[3 * i + 1], this.normals[3 * i + 2]];
  }
}

export function parseGlyphDataset(data: ArrayBuffer, meta: GlyphMeta): GlyphDataset {
  const view = new DataView(data);
  const magic = String.fromCharCode(
    view.getUint8(0), view.getUint8(1), view.getUint8(2), view.getUint8(3),
  );
  if (magic !== "SGLY") throw new GlyphParseError(`bad glyph magic ${magic}`);
  const version = view.getUint32(4, true);
  if (version !== 1) throw new GlyphParseError(`unsupported glyph version ${version}`);
  const R = view.getUint32(8, true);
  const M = view.getUint32(12, true);
  const N = view.getUint32(16, true);
  const band = view.getInt32(20, true);
  const expected = 24 + 4 * (3 * R + 3 * R + R * M * N);
  if (data.byteLength !== expected) {
    throw new GlyphParseError(`glyph payload is ${data.byteLength} bytes, expected ${expected}`);
  }
  if (meta.field_names.length !== M || meta.bin_edges.length - 1 !== N) {
    throw new GlyphParseError("sidecar disagrees with binary header");
  }
  let off = 24;
  const positions = new Float32Array(data.slice(off, off + 12 * R));
  off += 12 * R;
  const normals = new Float32Array(data.slice(off, off + 12 * R));
  off += 12 * R;
  const buffer = new Float32Array(data.slice(off, off + 4 * R * M * N));
  return new GlyphDataset(
    band, Int32Array.from(meta.region_ids), positions, normals, buffer,
    meta.field_names, meta.bin_edges, meta.bin_lengths,
  );
}
