/**
 * Viewer state: camera, active dataset/band, glyph design, visible field and
 * bin subsets, normalization, selection. Both glyph designs read glyph values
 * through the same accessor, so switching designs re-encodes the identical
 * numbers rather than recomputing anything.
 */

import { GlyphDataset } from "./glyphData";
import { statIndex, Vec3 } from "./glyphMath";
import {
  DEFAULT_NORMALIZATION, NormalizationConfig, NormalizationResult, normalizeScalar,
} from "./normalize";

export type GlyphDesign = "strength" | "starplot";

export interface Camera {
  position: Vec3;
  rView: Vec3;
  uView: Vec3;
  fView: Vec3;
}

export class ViewStateError extends Error {}

export interface ViewStateInit {
  datasetId: string;
  band: number;
  fieldNames: string[];
  nBins: number;
  camera?: Camera;
}

const DEFAULT_CAMERA: Camera = {
  position: [0, 0, 10],
  rView: [1, 0, 0],
  uView: [0, 1, 0],
  fView: [0, 0, 1],
};

export class ViewState {
  datasetId: string;
  band: number;
  camera: Camera;
  design: GlyphDesign = "strength";
  visibleFields: number[];
  visibleBins: number[];
  normalization: NormalizationConfig = { ...DEFAULT_NORMALIZATION };
  colorMaps: string[];
  glyphSize = 1.0;
  selection: Set<number> = new Set();

  private readonly fieldNames: string[];
  private readonly nBins: number;

  constructor(init: ViewStateInit) {
    this.datasetId = init.datasetId;
    this.band = init.band;
    this.camera = init.camera ?? DEFAULT_CAMERA;
    this.fieldNames = init.fieldNames;
    this.nBins = init.nBins;
    this.visibleFields = init.fieldNames.map((_, l) => l);
    this.visibleBins = Array.from({ length: init.nBins }, (_, k) => k);
    this.colorMaps = init.fieldNames.map(() => "viridis");
    this.check();
  }

  private check(): void {
    if (this.visibleFields.length === 0) throw new ViewStateError("visible fields must be non-empty");
    if (this.glyphSize <= 0) throw new ViewStateError("glyph size must be positive");
    if (this.design === "starplot" && this.visibleBins.length !== 1) {
      throw new ViewStateError("starplot mode needs exactly one active bin");
    }
    if (this.visibleBins.some((k) => k < 0 || k >= this.nBins)) {
      throw new ViewStateError("visible bin out of range");
    }
    if (this.visibleFields.some((l) => l < 0 || l >= this.fieldNames.length)) {
      throw new ViewStateError("visible field out of range");
    }
  }

  /**
   * Switch glyph design without touching data. Entering starplot mode
   * collapses the visible bins to the first one, the single active bin.
   */
  switchDesign(design: GlyphDesign): void {
    if (design === this.design) return;
    if (design === "starplot" && this.visibleBins.length !== 1) {
      this.visibleBins = [this.visibleBins[0] ?? 0];
    }
    this.design = design;
    this.check();
  }

  configure(update: Partial<Pick<ViewState,
    "visibleFields" | "visibleBins" | "normalization" | "colorMaps" | "glyphSize" | "band">>,
  ): void {
    Object.assign(this, update);
    this.check();
  }

  /** Replace the selection (no implicit union); empty clears highlights. */
  applySelection(regionIds: number[]): void {
    this.selection = new Set(regionIds);
  }

  /** Normalized scalar for one glyph cell; both designs go through here. */
  cellValue(
    dataset: GlyphDataset, norm: NormalizationResult, datasetIndex: number,
    i: number, l: number, k: number,
  ): number {
    const raw = norm.buffers[datasetIndex][statIndex(i, l, k, dataset.nFields, dataset.nBins)];
    return normalizeScalar(raw, norm.gamma[l]);
  }

  /** Per-axis starplot radii of region i: visible fields at the active bin. */
  starplotAxisValues(
    dataset: GlyphDataset, norm: NormalizationResult, datasetIndex: number, i: number,
  ): number[] {
    const k = this.visibleBins[0];
    return this.visibleFields.map((l) => this.cellValue(dataset, norm, datasetIndex, i, l, k));
  }
}
