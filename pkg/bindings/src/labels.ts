/**
 * Pixel-level operations over dense row-major typed arrays.
 *
 * Label grids use the maximum representable value of their storage width as
 * the ignore sentinel (255 for Uint8Array, 65535 for Uint16Array), matching
 * the on-disk label PNG convention of the pipeline CLI. Probability volumes
 * are class-major Float32Arrays of length numClasses * height * width.
 */

export type LabelArray = Uint8Array | Uint16Array;

export interface GridShape {
  width: number;
  height: number;
  numClasses: number;
}

export function ignoreValue(numClasses: number): number {
  if (numClasses < 1) throw new RangeError(`numClasses must be >= 1, got ${numClasses}`);
  if (numClasses <= 254) return 255;
  if (numClasses <= 65534) return 65535;
  throw new RangeError(`numClasses ${numClasses} exceeds 16-bit label storage`);
}

export function allocLabels(numClasses: number, length: number): LabelArray {
  return numClasses <= 254 ? new Uint8Array(length) : new Uint16Array(length);
}

function checkLength(name: string, actual: number, expected: number): void {
  if (actual !== expected) {
    throw new RangeError(`${name} has length ${actual}, expected ${expected}`);
  }
}

/**
 * Confidence-thresholded argmax labelling of a class-major probability
 * volume. The comparison is inclusive (>=) in double precision and argmax
 * ties resolve to the lowest class index; pixels below the threshold come
 * out as ignore.
 */
export function pseudoLabel(probs: Float32Array, tauSsl: number, shape: GridShape): LabelArray {
  const { width, height, numClasses } = shape;
  if (!(tauSsl >= 0 && tauSsl <= 1)) throw new RangeError(`tauSsl must be in [0, 1], got ${tauSsl}`);
  const pixels = width * height;
  checkLength("probs", probs.length, numClasses * pixels);
  const ignore = ignoreValue(numClasses);
  const out = allocLabels(numClasses, pixels);
  for (let p = 0; p < pixels; p++) {
    let bestK = 0;
    let bestV = probs[p];
    for (let k = 1; k < numClasses; k++) {
      const v = probs[k * pixels + p];
      if (v > bestV) {
        bestV = v;
        bestK = k;
      }
    }
    out[p] = bestV >= tauSsl ? bestK : ignore;
  }
  return out;
}

/**
 * Keep pseudo-labels only where they match a non-ignore GT label; the
 * result is a fresh buffer, never a view over the inputs.
 */
export function refine(pseudo: LabelArray, gt: LabelArray, shape: GridShape): LabelArray {
  const { width, height, numClasses } = shape;
  const pixels = width * height;
  checkLength("pseudo", pseudo.length, pixels);
  checkLength("gt", gt.length, pixels);
  const ignore = ignoreValue(numClasses);
  const out = allocLabels(numClasses, pixels);
  for (let p = 0; p < pixels; p++) {
    const g = gt[p];
    out[p] = g !== ignore && pseudo[p] === g ? g : ignore;
  }
  return out;
}
