import { describe, expect, it } from "vitest";
import { GlyphMeta, GlyphParseError, parseGlyphDataset } from "../src/glyphData";
import { parseMesh } from "../src/meshData";
import { fixtureBytes, fixtureJson } from "./helpers";

interface Expected {
  band: number;
  R: number;
  M: number;
  N: number;
  positions: number[];
  normals: number[];
  samples: Array<{ i: number; l: number; k: number; v: number }>;
}

const bytes = fixtureBytes("glyphs.bin");
const meta = fixtureJson<GlyphMeta>("glyphs.json");
const expected = fixtureJson<Expected>("glyphs_expected.json");

describe("glyph dataset parsing", () => {
  it("reads the header and dimensions", () => {
    const ds = parseGlyphDataset(bytes, meta);
    expect(ds.band).toBe(expected.band);
    expect(ds.nRegions).toBe(expected.R);
    expect(ds.nFields).toBe(expected.M);
    expect(ds.nBins).toBe(expected.N);
    expect(ds.fieldNames).toEqual(meta.field_names);
  });

  it("recovers every producer value exactly (float32 round trip)", () => {
    const ds = parseGlyphDataset(bytes, meta);
    for (const s of expected.samples) {
      expect(ds.value(s.i, s.l, s.k)).toBe(Math.fround(s.v));
    }
    for (let i = 0; i < expected.R; i++) {
      for (let c = 0; c < 3; c++) {
        expect(ds.positions[3 * i + c]).toBe(Math.fround(expected.positions[3 * i + c]));
        expect(ds.normals[3 * i + c]).toBe(Math.fround(expected.normals[3 * i + c]));
      }
    }
  });

  it("rejects bad magic, version, and truncation", () => {
    const bad = new Uint8Array(bytes.slice(0));
    bad[0] = 0x58;
    expect(() => parseGlyphDataset(bad.buffer, meta)).toThrow(GlyphParseError);
    const short = bytes.slice(0, bytes.byteLength - 4);
    expect(() => parseGlyphDataset(short, meta)).toThrow(GlyphParseError);
    const v2 = new Uint8Array(bytes.slice(0));
    v2[4] = 2;
    expect(() => parseGlyphDataset(v2.buffer, meta)).toThrow(/version/);
  });
});

describe("mesh parsing", () => {
  it("recovers vertices, normals, and indices exactly", () => {
    const want = fixtureJson<{ vertices: number[]; normals: number[]; triangles: number[] }>(
      "mesh_expected.json",
    );
    const mesh = parseMesh(fixtureBytes("mesh.bin"));
    expect(mesh.vertices.length).toBe(want.vertices.length);
    for (let i = 0; i < want.vertices.length; i++) {
      expect(mesh.vertices[i]).toBe(Math.fround(want.vertices[i]));
      expect(mesh.normals[i]).toBe(Math.fround(want.normals[i]));
    }
    expect(Array.from(mesh.triangles)).toEqual(want.triangles);
  });
});
