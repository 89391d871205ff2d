/**
 * Instanced glyph rendering. CPU side builds one 4x4 instance matrix per
 * glyph from the orientation basis; the fragment shader reproduces the
 * reference classification (wedge/ring for strength, polygon wedge test for
 * starplot) against a per-glyph value texture.
 */

import * as THREE from "three";
import { GlyphDataset } from "./glyphData";
import { orientationMatrix, Vec3 } from "./glyphMath";
import { SurfaceMesh } from "./meshData";
import { NormalizationResult } from "./normalize";
import { Camera, ViewState } from "./viewState";

/**
 * Column-major 4x4 placing the unit-disk glyph model at `position`, up axis
 * along `normal`, right axis camera-aligned, uniformly scaled by `size`.
 */
export function glyphInstanceMatrix(
  position: Vec3, normal: Vec3, camera: Camera, size: number,
): Float32Array {
  const [r, u, f] = orientationMatrix(normal, camera);
  // model -> world is x*r + y*u + z*f, so basis vectors are the columns
  return new Float32Array([
    r[0] * size, r[1] * size, r[2] * size, 0,
    u[0] * size, u[1] * size, u[2] * size, 0,
    f[0] * size, f[1] * size, f[2] * size, 0,
    position[0], position[1], position[2], 1,
  ]);
}

export function buildInstanceMatrices(
  dataset: GlyphDataset, camera: Camera, size: number,
): Float32Array[] {
  const out: Float32Array[] = [];
  for (let i = 0; i < dataset.nRegions; i++) {
    out.push(glyphInstanceMatrix(dataset.position(i), dataset.normal(i), camera, size));
  }
  return out;
}

const CATEGORICAL = [0x4477aa, 0xee6677, 0x228833, 0xccbb44, 0x66ccee, 0xaa3377, 0xbbbbbb];

/** Fixed categorical palette for starplot bins. */
export function binColor(k: number): number {
  return CATEGORICAL[k % CATEGORICAL.length];
}

const GLYPH_VERT = /* glsl */ `
  varying vec2 vModel;   // model-space (x, z) on the disk
  varying float vInstance;
  void main() {
    vModel = vec2(position.x, position.z);
    vInstance = float(gl_InstanceID);
    gl_Position = projectionMatrix * modelViewMatrix * instanceMatrix * vec4(position, 1.0);
  }
`;

const GLYPH_FRAG = /* glsl */ `
  precision highp float;
  varying vec2 vModel;
  varying float vInstance;
  uniform sampler2D values;   // nFields x nBins per instance row, in [0,1]
  uniform sampler2D palette;  // per-field color ramps stacked vertically
  uniform float nFields;
  uniform float nBins;
  uniform float design;       // 0 strength, 1 starplot
  uniform float activeBin;
  uniform float border;       // border annulus start radius
  uniform float selected;     // 1 when this draw pass is the highlight pass

  const float PI = 3.141592653589793;

  float cellValue(float l, float k) {
    vec2 uv = vec2((l * nBins + k + 0.5) / (nFields * nBins), (vInstance + 0.5) / 4096.0);
    return texture2D(values, uv).r;
  }

  void main() {
    float r = length(vModel);
    if (r > 1.0) discard;
    if (r > border) {
      gl_FragColor = vec4(vec3(0.15), 1.0);
      return;
    }
    if (design < 0.5) {
      float theta = atan(vModel.x, vModel.y) + PI;
      if (theta >= 2.0 * PI) theta -= 2.0 * PI;
      float k = min(nBins - 1.0, floor(r / border * nBins));
      float l = min(nFields - 1.0, floor(theta * nFields / (2.0 * PI)));
      float s = cellValue(l, k);
      vec3 c = texture2D(palette, vec2(s, (l + 0.5) / nFields)).rgb;
      gl_FragColor = vec4(c, 1.0);
    } else {
      vec2 p = vModel / border;
      float theta = mod(atan(p.y, p.x) + 2.0 * PI, 2.0 * PI);
      float la = min(nFields - 1.0, floor(theta * nFields / (2.0 * PI)));
      float lb = mod(la + 1.0, nFields);
      float va = cellValue(la, activeBin);
      float vb = cellValue(lb, activeBin);
      vec2 a = va * vec2(cos(la * 2.0 * PI / nFields), sin(la * 2.0 * PI / nFields));
      vec2 b = vb * vec2(cos(lb * 2.0 * PI / nFields), sin(lb * 2.0 * PI / nFields));
      float hyp = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      float sa = a.x * p.y - a.y * p.x;
      float sb = b.x * p.y - b.y * p.x;
      bool inside = (p == vec2(0.0)) || (hyp > 0.0 && sa >= 0.0 && sb <= 0.0);
      if (!inside) discard;
      gl_FragColor = vec4(texture2D(palette, vec2(0.8, (activeBin + 0.5) / nBins)).rgb, 1.0);
    }
  }
`;

export interface Viewer {
  scene: THREE.Scene;
  camera: THREE.PerspectiveCamera;
  glyphs: THREE.InstancedMesh;
  update(state: ViewState, norm: NormalizationResult, datasetIndex: number): void;
}

function valueTexture(dataset: GlyphDataset, norm: NormalizationResult, di: number): THREE.DataTexture {
  const M = dataset.nFields;
  const N = dataset.nBins;
  const data = new Float32Array(M * N * 4096);
  for (let i = 0; i < Math.min(dataset.nRegions, 4096); i++) {
    for (let c = 0; c < M * N; c++) data[i * M * N + c] = norm.buffers[di][i * M * N + c];
  }
  const tex = new THREE.DataTexture(data, M * N, 4096, THREE.RedFormat, THREE.FloatType);
  tex.needsUpdate = true;
  return tex;
}

export function createViewer(
  canvas: HTMLCanvasElement, dataset: GlyphDataset, surface: SurfaceMesh, state: ViewState,
): Viewer {
  const scene = new THREE.Scene();
  const camera = new THREE.PerspectiveCamera(45, canvas.width / canvas.height, 0.1, 1e4);
  camera.position.set(...state.camera.position);

  const geom = new THREE.BufferGeometry();
  geom.setAttribute("position", new THREE.BufferAttribute(surface.vertices, 3));
  geom.setAttribute("normal", new THREE.BufferAttribute(surface.normals, 3));
  geom.setIndex(new THREE.BufferAttribute(surface.triangles, 1));
  scene.add(new THREE.Mesh(geom, new THREE.MeshLambertMaterial({ color: 0x888888 })));
  scene.add(new THREE.AmbientLight(0xffffff, 0.6));
  scene.add(new THREE.DirectionalLight(0xffffff, 0.8));

  const disk = new THREE.CircleGeometry(1, 64);
  disk.rotateX(-Math.PI / 2); // disk normal along model up axis
  const material = new THREE.ShaderMaterial({
    vertexShader: GLYPH_VERT,
    fragmentShader: GLYPH_FRAG,
    uniforms: {
      values: { value: null },
      palette: { value: null },
      nFields: { value: dataset.nFields },
      nBins: { value: dataset.nBins },
      design: { value: 0 },
      activeBin: { value: 0 },
      border: { value: 0.92 },
      selected: { value: 0 },
    },
    side: THREE.DoubleSide,
  });
  const glyphs = new THREE.InstancedMesh(disk, material, dataset.nRegions);
  scene.add(glyphs);

  function update(st: ViewState, norm: NormalizationResult, datasetIndex: number): void {
    const mats = buildInstanceMatrices(dataset, st.camera, st.glyphSize);
    const m = new THREE.Matrix4();
    for (let i = 0; i < mats.length; i++) {
      m.fromArray(mats[i]);
      glyphs.setMatrixAt(i, m);
    }
    glyphs.instanceMatrix.needsUpdate = true;
    material.uniforms.design.value = st.design === "starplot" ? 1 : 0;
    material.uniforms.activeBin.value = st.visibleBins[0] ?? 0;
    material.uniforms.values.value = valueTexture(dataset, norm, datasetIndex);
  }

  update(state, { gamma: [], buffers: [Float64Array.from(dataset.buffer)], zeroFlagged: [] }, 0);
  return { scene, camera, glyphs, update };
}
