/**
 * Per-image class-balance scoring over label grids.
 *
 * Mirrors the pipeline's scorer bit for bit: GT-matched refinement is
 * folded into the counting pass and the score accumulates class by class in
 * ascending order, so results are exactly equal to the reference
 * implementation on identical inputs.
 */

import { type GridShape, type LabelArray, ignoreValue } from "./labels.js";

export interface ScoreOptions extends GridShape {
  /** Use the full pixel count as the area denominator (default true). */
  ignoreInTotal?: boolean;
}

export interface ImageScore {
  score: number;
  nImage: number;
  /** GT pixels per class, classes present only. */
  nClass: Record<number, number>;
  /** Correctly pseudo-labelled pixels per class, nonzero entries only. */
  nCorrect: Record<number, number>;
}

export function scoreImage(pseudo: LabelArray, gt: LabelArray, opts: ScoreOptions): ImageScore {
  const { width, height, numClasses } = opts;
  const pixels = width * height;
  if (pixels === 0) throw new RangeError("cannot score a zero-pixel image");
  if (pseudo.length !== pixels || gt.length !== pixels) {
    throw new RangeError(
      `label arrays must have width*height entries (${pixels}), got ${pseudo.length}/${gt.length}`,
    );
  }
  const ignore = ignoreValue(numClasses);
  const nClass = new Float64Array(numClasses);
  const nCorrect = new Float64Array(numClasses);
  for (let p = 0; p < pixels; p++) {
    const g = gt[p];
    if (g === ignore) continue;
    nClass[g] += 1;
    if (pseudo[p] === g) nCorrect[g] += 1;
  }

  let covered = 0;
  for (let k = 0; k < numClasses; k++) covered += nClass[k];
  const denom = (opts.ignoreInTotal ?? true) ? pixels : covered;
  let total = 0.0;
  for (let k = 0; k < numClasses; k++) {
    if (nClass[k] > 0) {
      total += (nCorrect[k] / nClass[k]) * (1.0 - nClass[k] / denom);
    }
  }

  const classCounts: Record<number, number> = {};
  const correctCounts: Record<number, number> = {};
  for (let k = 0; k < numClasses; k++) {
    if (nClass[k] > 0) classCounts[k] = nClass[k];
    if (nCorrect[k] > 0) correctCounts[k] = nCorrect[k];
  }
  return { score: total, nImage: pixels, nClass: classCounts, nCorrect: correctCounts };
}
