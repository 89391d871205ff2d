/**
 * Lasso selection geometry. The authoritative selection is computed by the
 * service; this client-side mirror exists for instant visual feedback and
 * for parity testing against the service responses.
 */

export type Point = [number, number];

function onSegment(p: Point, a: Point, b: Point, eps = 1e-12): boolean {
  const cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
  if (Math.abs(cross) > eps * Math.max(1, Math.abs(b[0] - a[0]) + Math.abs(b[1] - a[1]))) {
    return false;
  }
  const dotv = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]);
  return -eps <= dotv && dotv <= (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + eps;
}

/** Even-odd (ray casting) test; boundary points count as inside. */
export function pointInPolygon(p: Point, polygon: Point[]): boolean {
  const n = polygon.length;
  let inside = false;
  for (let i = 0; i < n; i++) {
    const a = polygon[i];
    const b = polygon[(i + 1) % n];
    if (onSegment(p, a, b)) return true;
    if ((a[1] > p[1]) !== (b[1] > p[1])) {
      const xi = a[0] + ((p[1] - a[1]) * (b[0] - a[0])) / (b[1] - a[1]);
      if (p[0] < xi) inside = !inside;
    }
  }
  return inside;
}

export function polygonArea(polygon: Point[]): number {
  let twice = 0;
  for (let i = 0; i < polygon.length; i++) {
    const [x0, y0] = polygon[i];
    const [x1, y1] = polygon[(i + 1) % polygon.length];
    twice += x0 * y1 - y0 * x1;
  }
  return Math.abs(twice) / 2;
}

/**
 * Region ids whose scatter point falls inside the lasso, sorted ascending.
 * Degenerate (zero-area) polygons select nothing.
 */
export function lassoSelect(
  polygon: Point[], regionIds: number[], xs: number[], ys: number[],
): number[] {
  if (polygon.length < 3) throw new RangeError("lasso polygon needs at least 3 vertices");
  if (polygonArea(polygon) === 0) return [];
  const out: number[] = [];
  for (let i = 0; i < regionIds.length; i++) {
    if (pointInPolygon([xs[i], ys[i]], polygon)) out.push(regionIds[i]);
  }
  return out.sort((a, b) => a - b);
}
