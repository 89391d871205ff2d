/**
 * Viewer bootstrap: read the session from the URL hash, load artifacts from
 * the service, wire the side panel, scatterplot lasso, and render loop.
 */

import * as THREE from "three";
import { ServiceClient } from "./api";
import { normalizationRange } from "./normalize";
import { createViewer } from "./render";
import { Point } from "./selection";
import { GlyphDesign, ViewState } from "./viewState";

interface HashState {
  dataset: string;
  band: number;
  design: GlyphDesign;
}

function readHash(): HashState {
  const h = new URLSearchParams(window.location.hash.slice(1));
  return {
    dataset: h.get("dataset") ?? "",
    band: Number(h.get("band") ?? 0),
    design: (h.get("design") as GlyphDesign) ?? "strength",
  };
}

function writeHash(s: HashState): void {
  window.location.hash = `dataset=${s.dataset}&band=${s.band}&design=${s.design}`;
}

async function boot(): Promise<void> {
  const client = new ServiceClient("");
  const datasets = await client.listDatasets();
  if (datasets.length === 0) return;
  const hash = readHash();
  const summary = datasets.find((d) => d.id === hash.dataset) ?? datasets[0];
  const band = summary.bands.includes(hash.band) ? hash.band : summary.bands[0];

  const glyphs = await client.fetchGlyphs(summary.id, band);
  const mesh = await client.fetchMesh(summary.id, summary.surfaces[0]);
  const state = new ViewState({
    datasetId: summary.id,
    band,
    fieldNames: glyphs.fieldNames,
    nBins: glyphs.nBins,
  });
  state.switchDesign(hash.design);
  writeHash({ dataset: summary.id, band, design: state.design });

  const canvas3d = document.getElementById("view3d") as HTMLCanvasElement;
  const renderer = new THREE.WebGLRenderer({ canvas: canvas3d, antialias: true });
  const viewer = createViewer(canvas3d, glyphs, mesh, state);

  const norm = normalizationRange([glyphs], state.normalization);
  viewer.update(state, norm, 0);

  // scatterplot with lasso selection, fanned out to the 3D view
  const canvas2d = document.getElementById("scatter") as HTMLCanvasElement;
  const xCol = `${glyphs.fieldNames[0]}:mean`;
  const yCol = `${glyphs.fieldNames[0]}:bin0`;
  const table = await client.fetchScatter(summary.id, xCol, yCol);
  const lasso: Point[] = [];
  canvas2d.addEventListener("pointerdown", () => lasso.length = 0);
  canvas2d.addEventListener("pointermove", (ev) => {
    if (ev.buttons & 1) lasso.push([ev.offsetX, ev.offsetY]);
  });
  canvas2d.addEventListener("pointerup", async () => {
    if (lasso.length < 3) return;
    try {
      const ids = await client.select(summary.id, table.x, table.y, lasso);
      state.applySelection(ids); // replaces any prior selection
      viewer.update(state, norm, 0);
    } catch {
      // non-blocking: keep the previous selection on service errors
    }
  });

  const designToggle = document.getElementById("design") as HTMLSelectElement | null;
  designToggle?.addEventListener("change", () => {
    state.switchDesign(designToggle.value as GlyphDesign);
    writeHash({ dataset: summary.id, band, design: state.design });
    viewer.update(state, norm, 0);
  });

  function frame(): void {
    renderer.render(viewer.scene, viewer.camera);
    requestAnimationFrame(frame);
  }
  frame();
}

boot().catch((err) => console.error(err));
