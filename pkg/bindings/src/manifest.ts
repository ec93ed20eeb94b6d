/**
 * JSONL manifest interop with the pipeline CLI.
 *
 * A manifest is a header line {"format":"sdss-manifest","version":1,
 * "config":{...}} followed by one record object per line. Files written
 * here are read back losslessly by the CLI; scores survive as exact
 * doubles (shortest round-trip serialisation on both sides).
 */

import { readFileSync, writeFileSync } from "node:fs";

import { compareRecords } from "./selection.js";

export const MANIFEST_FORMAT = "sdss-manifest";
export const MANIFEST_VERSION = 1;

export interface ScoredRecord {
  id: string;
  score: number;
  nImage: number;
  nClass: Record<string, number>;
  nCorrect: Record<string, number>;
  paths: Record<string, string>;
}

export interface Manifest {
  config: Record<string, unknown>;
  records: ScoredRecord[];
}

export class ManifestError extends Error {}

function recordToLine(r: ScoredRecord): string {
  return JSON.stringify({
    id: r.id,
    score: r.score,
    n_image: r.nImage,
    n_class: r.nClass,
    n_correct: r.nCorrect,
    paths: r.paths,
  });
}

export function serializeManifest(manifest: Manifest): string {
  const header = JSON.stringify({
    format: MANIFEST_FORMAT,
    version: MANIFEST_VERSION,
    config: manifest.config,
  });
  const records = [...manifest.records].sort(compareRecords);
  const seen = new Set<string>();
  for (const r of records) {
    if (seen.has(r.id)) throw new ManifestError(`duplicate image id ${r.id}`);
    seen.add(r.id);
  }
  const lines = [header, ...records.map(recordToLine)];
  return lines.join("\n") + "\n";
}

function asRecord(obj: Record<string, unknown>, lineNo: number): ScoredRecord {
  if (typeof obj.id !== "string" || typeof obj.score !== "number" || typeof obj.n_image !== "number") {
    throw new ManifestError(`line ${lineNo}: record needs string id and numeric score/n_image`);
  }
  return {
    id: obj.id,
    score: obj.score,
    nImage: obj.n_image,
    nClass: (obj.n_class ?? {}) as Record<string, number>,
    nCorrect: (obj.n_correct ?? {}) as Record<string, number>,
    paths: (obj.paths ?? {}) as Record<string, string>,
  };
}

export function parseManifest(text: string): Manifest {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) throw new ManifestError("empty file: manifest requires a header line");
  let header: Record<string, unknown>;
  try {
    header = JSON.parse(lines[0]);
  } catch (e) {
    throw new ManifestError(`line 1: invalid JSON: ${String(e)}`);
  }
  if (header.format !== MANIFEST_FORMAT) throw new ManifestError("missing sdss-manifest header");
  if (header.version !== MANIFEST_VERSION) {
    throw new ManifestError(`unsupported manifest version ${header.version}`);
  }
  const records: ScoredRecord[] = [];
  const seen = new Set<string>();
  for (let i = 1; i < lines.length; i++) {
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(lines[i]);
    } catch (e) {
      throw new ManifestError(`line ${i + 1}: invalid JSON: ${String(e)}`);
    }
    const rec = asRecord(obj, i + 1);
    if (seen.has(rec.id)) throw new ManifestError(`duplicate image id ${rec.id}`);
    seen.add(rec.id);
    records.push(rec);
  }
  return { config: (header.config ?? {}) as Record<string, unknown>, records };
}

export function readManifest(path: string): Manifest {
  return parseManifest(readFileSync(path, "utf-8"));
}

export function writeManifest(manifest: Manifest, path: string): void {
  writeFileSync(path, serializeManifest(manifest), "utf-8");
}
