/**
 * Binary triangle mesh parsing: little-endian u32 vertex count, vertices
 * (f32 x3), vertex normals (f32 x3), u32 triangle count, indices (u32 x3).
 */

export interface SurfaceMesh {
  vertices: Float32Array; // (nv*3)
  normals: Float32Array;  // (nv*3)
  triangles: Uint32Array; // (nt*3)
}

export class MeshParseError extends Error {}

export function parseMesh(data: ArrayBuffer): SurfaceMesh {
  const view = new DataView(data);
  const nv = view.getUint32(0, true);
  let off = 4;
  const vertices = new Float32Array(data.slice(off, off + 12 * nv));
  off += 12 * nv;
  const normals = new Float32Array(data.slice(off, off + 12 * nv));
  off += 12 * nv;
  const nt = view.getUint32(off, true);
  off += 4;
  const triangles = new Uint32Array(data.slice(off, off + 12 * nt));
  if (data.byteLength !== off + 12 * nt) {
    throw new MeshParseError(`mesh payload is ${data.byteLength} bytes, expected ${off + 12 * nt}`);
  }
  return { vertices, normals, triangles };
}
