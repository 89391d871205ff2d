/**
 * Reference glyph math, mirrored from the producing pipeline.
 *
 * Any divergence from the producer breaks glyph rendering correctness, so
 * every function here is covered by parity tests against vectors generated
 * by the producer implementation.
 */

export type Vec3 = [number, number, number];
export type Vec2 = [number, number];

/** Flat index of bin k of field l in region i: i*M*N + N*l + k. */
export function statIndex(i: number, l: number, k: number, M: number, N: number): number {
  if (!(0 <= l && l < M && 0 <= k && k < N && i >= 0)) {
    throw new RangeError(`statIndex out of range: i=${i}, l=${l}/${M}, k=${k}/${N}`);
  }
  return i * M * N + N * l + k;
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function norm(v: Vec3): number {
  return Math.hypot(v[0], v[1], v[2]);
}

function unit(v: Vec3): Vec3 | null {
  const n = norm(v);
  if (n <= 1e-12) return null;
  return [v[0] / n, v[1] / n, v[2] / n];
}

export interface ViewBasis {
  rView: Vec3;
  uView: Vec3;
  fView: Vec3;
}

/**
 * Per-glyph orthonormal basis, rows (right, up, forward).
 *
 * up is the surface normal; right = normalize(up x upView) keeps the glyph
 * facing the camera, falling back to up x fView and then rView when the
 * normal is parallel to the camera up.
 */
export function orientationMatrix(normal: Vec3, view: ViewBasis): [Vec3, Vec3, Vec3] {
  const u = normal;
  let r = unit(cross(u, view.uView));
  if (r === null) r = unit(cross(u, view.fView));
  if (r === null) {
    const n = norm(view.rView);
    r = [view.rView[0] / n, view.rView[1] / n, view.rView[2] / n];
  }
  const f = cross(r, u);
  return [r, u, f];
}

/** Model-space fragment angle about the up axis (atan2(x, z) + pi in [0, 2pi)) and radius. */
export function fragmentPolar(p: number[]): [number, number] {
  const x = p[0];
  const z = p.length === 3 ? p[2] : p[1];
  let theta = Math.atan2(x, z) + Math.PI;
  if (theta >= 2 * Math.PI) theta -= 2 * Math.PI;
  return [theta, Math.hypot(...p)];
}

/** (field l, bin k) of a strength-design fragment on the unit disk. */
export function classifyStrengthFragment(p: number[], M: number, N: number): [number, number] {
  const [theta, r] = fragmentPolar(p);
  const k = Math.min(N - 1, Math.floor(r * N));
  const l = Math.min(M - 1, Math.floor((theta * M) / (2 * Math.PI)));
  return [l, k];
}

/** Scaled wedge endpoints on axes lA and (lA + 1) mod M. */
export function starplotAxisPoints(
  lA: number, M: number, valueA: number, valueB: number,
): [Vec2, Vec2] {
  const thetaA = (lA * 2 * Math.PI) / M;
  const thetaB = (((lA + 1) % M) * 2 * Math.PI) / M;
  const pA: Vec2 = [valueA * Math.cos(thetaA), valueA * Math.sin(thetaA)];
  const pB: Vec2 = [valueB * Math.cos(thetaB), valueB * Math.sin(thetaB)];
  return [pA, pB];
}

/**
 * Is a 2D fragment inside the triangle [pA, pB, origin]? Hypotenuse and both
 * spoke edges are half-plane tests; the boundary counts as inside.
 */
export function starplotWedgeTest(pM: number[], pA: Vec2, pB: Vec2): boolean {
  const px = pM[0];
  const py = pM[1];
  if (px === 0 && py === 0) return true;
  const hyp = (pB[0] - pA[0]) * (py - pA[1]) - (pB[1] - pA[1]) * (px - pA[0]);
  if (hyp <= 0) return false;
  const spokeA = pA[0] * py - pA[1] * px;
  const spokeB = pB[0] * py - pB[1] * px;
  return spokeA >= 0 && spokeB <= 0;
}

/** Is a 2D fragment inside the starplot polygon with the given per-axis radii? */
export function classifyStarplotFragment(pM: number[], axisValues: number[]): boolean {
  const M = axisValues.length;
  if (M < 3) throw new RangeError("starplot needs at least 3 axes");
  const theta = ((Math.atan2(pM[1], pM[0]) % (2 * Math.PI)) + 2 * Math.PI) % (2 * Math.PI);
  const lA = Math.min(M - 1, Math.floor((theta * M) / (2 * Math.PI)));
  const lB = (lA + 1) % M;
  const [pA, pB] = starplotAxisPoints(lA, M, axisValues[lA], axisValues[lB]);
  return starplotWedgeTest(pM, pA, pB);
}
