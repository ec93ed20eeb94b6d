/**
 * Subset selection over scored records: strict thresholding and
 * top-percent cuts with the same ordering and rounding rules as the
 * pipeline CLI (score descending, id ascending; percent counts round half
 * away from zero).
 */

export interface RecordLike {
  id: string;
  score: number;
}

export function compareRecords(a: RecordLike, b: RecordLike): number {
  if (a.score !== b.score) return b.score - a.score;
  return a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
}

export function sortRecords<T extends RecordLike>(records: readonly T[]): T[] {
  return [...records].sort(compareRecords);
}

/** Records scoring strictly above the threshold, in manifest order. */
export function selectThreshold<T extends RecordLike>(records: readonly T[], tauC: number): T[] {
  return sortRecords(records.filter((r) => r.score > tauC));
}

/** Number of records a top-percent cut keeps. */
export function topCount(total: number, percent: number): number {
  if (!(percent > 0 && percent <= 100)) {
    throw new RangeError(`percent must be in (0, 100], got ${percent}`);
  }
  return Math.min(total, Math.floor((percent * total) / 100 + 0.5));
}

/** Highest-scoring percent of the records; ties at the cut break by id. */
export function selectTopPercent<T extends RecordLike>(records: readonly T[], percent: number): T[] {
  return sortRecords(records).slice(0, topCount(records.length, percent));
}
