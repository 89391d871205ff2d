/**
 * Client-side scalar-mapping ranges, mirroring the producer semantics so a
 * normalization change never needs a server round trip.
 *
 * Range policies: spatial GSN (all bands) vs LSN (visible bands only);
 * bins GBN (all bins) vs LBN (visible bins only); optional per-glyph (each
 * region/field bin vector rescaled to sum 1, zero-sum vectors flagged);
 * all_axes shares one range across fields; zero_min pins the minimum at 0.
 */

import { GlyphDataset } from "./glyphData";

export type Transform = "linear" | "sqrt" | "log";

export interface NormalizationConfig {
  spatial: "GSN" | "LSN";
  bins: "GBN" | "LBN";
  perGlyph: boolean;
  allAxes: boolean;
  zeroMin: boolean;
  visibleBands: number[];
  visibleBins: number[];
  transform: Transform;
}

export const DEFAULT_NORMALIZATION: NormalizationConfig = {
  spatial: "GSN",
  bins: "GBN",
  perGlyph: false,
  allAxes: false,
  zeroMin: false,
  visibleBands: [],
  visibleBins: [],
  transform: "linear",
};

export class NormalizationError extends Error {}

export interface NormalizationResult {
  gamma: Array<[number, number]>; // per-field (min, max)
  buffers: Float64Array[];        // transformed (R*M*N) per dataset
  zeroFlagged: Uint8Array[];      // (R*M) per dataset: zero-sum per-glyph vectors
}

export function validateConfig(config: NormalizationConfig): void {
  if (config.spatial === "LSN" && config.visibleBands.length === 0) {
    throw new NormalizationError("LSN requires a non-empty visible band set");
  }
  if (config.bins === "LBN" && config.visibleBins.length === 0) {
    throw new NormalizationError("LBN requires a non-empty visible bin set");
  }
}

/** Rescale each region/field bin vector to sum 1; zero-sum vectors stay zero, flagged. */
export function applyPerGlyph(
  table: Float64Array, R: number, M: number, N: number,
): { out: Float64Array; flagged: Uint8Array } {
  const out = new Float64Array(table.length);
  const flagged = new Uint8Array(R * M);
  for (let i = 0; i < R; i++) {
    for (let l = 0; l < M; l++) {
      const base = (i * M + l) * N;
      let sum = 0;
      for (let k = 0; k < N; k++) sum += table[base + k];
      if (sum === 0) {
        flagged[i * M + l] = 1;
      } else {
        for (let k = 0; k < N; k++) out[base + k] = table[base + k] / sum;
      }
    }
  }
  return { out, flagged };
}

export function applyTransform(values: Float64Array, transform: Transform, gammaMax: number): Float64Array {
  if (transform === "linear") return values;
  const out = new Float64Array(values.length);
  if (transform === "sqrt") {
    for (let i = 0; i < values.length; i++) out[i] = Math.sqrt(values[i]);
    return out;
  }
  const eps = gammaMax > 0 ? 1e-12 * gammaMax : 1e-12;
  for (let i = 0; i < values.length; i++) out[i] = Math.log1p(values[i] / eps);
  return out;
}

export function normalizationRange(
  datasets: GlyphDataset[], config: NormalizationConfig,
): NormalizationResult {
  validateConfig(config);
  if (datasets.length === 0) {
    throw new NormalizationError("normalizationRange needs at least one dataset");
  }
  const M = datasets[0].nFields;
  const N = datasets[0].nBins;
  for (const d of datasets) {
    if (d.nFields !== M || d.nBins !== N) {
      throw new NormalizationError("datasets disagree on field/bin counts");
    }
  }

  let tables: Float64Array[] = [];
  const flags: Uint8Array[] = [];
  for (const d of datasets) {
    const t = Float64Array.from(d.buffer);
    if (config.perGlyph) {
      const { out, flagged } = applyPerGlyph(t, d.nRegions, M, N);
      tables.push(out);
      flags.push(flagged);
    } else {
      tables.push(t);
      flags.push(new Uint8Array(d.nRegions * M));
    }
  }

  let bandSel: number[];
  if (config.spatial === "GSN") {
    bandSel = datasets.map((_, i) => i);
  } else {
    const byBand = new Map(datasets.map((d, i) => [d.band, i]));
    bandSel = config.visibleBands.map((b) => {
      const i = byBand.get(b);
      if (i === undefined) throw new NormalizationError(`visible band ${b} not among datasets`);
      return i;
    });
  }
  const binSel = config.bins === "GBN"
    ? Array.from({ length: N }, (_, k) => k)
    : [...config.visibleBins];
  for (const k of binSel) {
    if (!(0 <= k && k < N)) {
      throw new NormalizationError(`visible bins ${binSel} out of range for ${N} bins`);
    }
  }

  let gmax = -Infinity;
  for (const di of bandSel) {
    const t = tables[di];
    const R = datasets[di].nRegions;
    for (let i = 0; i < R; i++) {
      for (let l = 0; l < M; l++) {
        for (const k of binSel) gmax = Math.max(gmax, t[(i * M + l) * N + k]);
      }
    }
  }
  tables = tables.map((t) => applyTransform(t, config.transform, gmax));

  const gamma: Array<[number, number]> = Array.from(
    { length: M }, () => [Infinity, -Infinity],
  );
  for (const di of bandSel) {
    const t = tables[di];
    const R = datasets[di].nRegions;
    for (let i = 0; i < R; i++) {
      for (let l = 0; l < M; l++) {
        for (const k of binSel) {
          const v = t[(i * M + l) * N + k];
          if (v < gamma[l][0]) gamma[l][0] = v;
          if (v > gamma[l][1]) gamma[l][1] = v;
        }
      }
    }
  }
  if (config.allAxes) {
    const lo = Math.min(...gamma.map((g) => g[0]));
    const hi = Math.max(...gamma.map((g) => g[1]));
    for (const g of gamma) {
      g[0] = lo;
      g[1] = hi;
    }
  }
  if (config.zeroMin) for (const g of gamma) g[0] = 0;
  return { gamma, buffers: tables, zeroFlagged: flags };
}

/** Map a transformed value into [0, 1] for color lookup; flat ranges map to 0. */
export function normalizeScalar(value: number, gamma: [number, number]): number {
  const span = gamma[1] - gamma[0];
  if (span <= 0) return 0;
  return Math.min(1, Math.max(0, (value - gamma[0]) / span));
}
