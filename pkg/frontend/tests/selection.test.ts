import { describe, expect, it } from "vitest";
import { ServiceClient } from "../src/api";
import { lassoSelect, Point, pointInPolygon } from "../src/selection";
import { ViewState } from "../src/viewState";
import { fixtureJson } from "./helpers";

interface SelectionFixture {
  ids: number[];
  xs: number[];
  ys: number[];
  cases: Array<{ polygon: number[][]; regionIds: number[] }>;
}

const fx = fixtureJson<SelectionFixture>("selection_vectors.json");
const SQUARE: Point[] = [[0, 0], [1, 0], [1, 1], [0, 1]];

/** Independent winding-number oracle (angle accumulation). */
function windingInside(p: Point, polygon: number[][]): boolean {
  let w = 0;
  for (let i = 0; i < polygon.length; i++) {
    const [ax, ay] = polygon[i];
    const [bx, by] = polygon[(i + 1) % polygon.length];
    const ux = ax - p[0];
    const uy = ay - p[1];
    const vx = bx - p[0];
    const vy = by - p[1];
    w += Math.atan2(ux * vy - uy * vx, ux * vx + uy * vy);
  }
  return Math.abs(w) > Math.PI;
}

describe("point-in-polygon", () => {
  it("handles interior, exterior, and boundary points", () => {
    expect(pointInPolygon([0.5, 0.5], SQUARE)).toBe(true);
    expect(pointInPolygon([2, 2], SQUARE)).toBe(false);
    expect(pointInPolygon([0, 0.5], SQUARE)).toBe(true); // edge
    expect(pointInPolygon([1, 1], SQUARE)).toBe(true);   // vertex
  });
});

describe("lasso selection", () => {
  it("selects interior points sorted ascending, empty for degenerate polygons", () => {
    expect(lassoSelect(SQUARE, [7, 3], [0.5, 2], [0.5, 2])).toEqual([7]);
    expect(lassoSelect([[-5, -5], [5, -5], [5, 5], [-5, 5]], [7, 3], [0.5, 2], [0.5, 2]))
      .toEqual([3, 7]);
    expect(lassoSelect([[0, 0], [1, 1], [2, 2]], [1], [0.5], [0.5])).toEqual([]);
    expect(() => lassoSelect([[0, 0], [1, 1]], [1], [0.5], [0.5])).toThrow(RangeError);
  });

  it("matches the service implementation on every fixture polygon", () => {
    for (const c of fx.cases) {
      const got = lassoSelect(c.polygon as Point[], fx.ids, fx.xs, fx.ys);
      expect(got).toEqual(c.regionIds);
    }
  });

  it("matches the winding-number oracle on boundary-free instances", () => {
    for (const c of fx.cases.slice(0, -1)) { // last case is the degenerate polygon
      const want = fx.ids.filter((i) => windingInside([fx.xs[i], fx.ys[i]], c.polygon));
      expect(c.regionIds).toEqual(want);
    }
  });
});

describe("selection round trip", () => {
  // fetch stub that answers POST /select with the service's recorded responses
  const byPolygon = new Map(fx.cases.map((c) => [JSON.stringify(c.polygon), c.regionIds]));
  const stubFetch = async (url: string, init?: RequestInit): Promise<Response> => {
    expect(url).toBe("/datasets/demo/select");
    const body = JSON.parse(String(init?.body));
    const ids = byPolygon.get(JSON.stringify(body.polygon));
    if (ids === undefined) return new Response("unknown polygon", { status: 400 });
    return new Response(JSON.stringify({ region_ids: ids }), {
      status: 200, headers: { "content-type": "application/json" },
    });
  };

  it("highlight set equals service response equals winding oracle", async () => {
    const client = new ServiceClient("", stubFetch);
    const state = new ViewState({ datasetId: "demo", band: 0, fieldNames: ["u"], nBins: 2 });
    for (const c of fx.cases.slice(0, -1)) {
      const ids = await client.select("demo", "u:mean", "u:bin0", c.polygon as Point[]);
      state.applySelection(ids);
      const oracle = new Set(
        fx.ids.filter((i) => windingInside([fx.xs[i], fx.ys[i]], c.polygon)),
      );
      expect(state.selection).toEqual(oracle);
    }
  });

  it("a second lasso replaces the first; empty clears", async () => {
    const client = new ServiceClient("", stubFetch);
    const state = new ViewState({ datasetId: "demo", band: 0, fieldNames: ["u"], nBins: 2 });
    const [first, second] = fx.cases;
    state.applySelection(await client.select("demo", "x", "y", first.polygon as Point[]));
    state.applySelection(await client.select("demo", "x", "y", second.polygon as Point[]));
    expect(state.selection).toEqual(new Set(second.regionIds));
    const degenerate = fx.cases[fx.cases.length - 1];
    state.applySelection(await client.select("demo", "x", "y", degenerate.polygon as Point[]));
    expect(state.selection.size).toBe(0);
  });
});
