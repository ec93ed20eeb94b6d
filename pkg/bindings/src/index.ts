/**
 * sdss-train-bindings: in-memory access to the subset-sampling pipeline
 * primitives for training loops, plus manifest interop with the CLI.
 *
 * All operations work on ordinary typed arrays (row-major, class-major for
 * probability volumes), allocate only their outputs, and are pure and
 * reentrant.
 */

export const VERSION = "0.1.0";

export {
  type GridShape,
  type LabelArray,
  allocLabels,
  ignoreValue,
  pseudoLabel,
  refine,
} from "./labels.js";
export { type ImageScore, type ScoreOptions, scoreImage } from "./scoring.js";
export {
  type RecordLike,
  compareRecords,
  selectThreshold,
  selectTopPercent,
  sortRecords,
  topCount,
} from "./selection.js";
export {
  MANIFEST_FORMAT,
  MANIFEST_VERSION,
  type Manifest,
  ManifestError,
  type ScoredRecord,
  parseManifest,
  readManifest,
  serializeManifest,
  writeManifest,
} from "./manifest.js";
