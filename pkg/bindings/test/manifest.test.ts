import { describe, expect, it } from "vitest";

import { ManifestError, parseManifest, readManifest, serializeManifest } from "../src/index.js";
import { fixturePath, loadFixture } from "./helpers.js";

interface ManifestExpected {
  count: number;
  firstId: string;
  scores: number[];
}

describe("manifest interop", () => {
  const expected = loadFixture<ManifestExpected>("manifest_expected.json");

  it("reads a pipeline-written manifest losslessly", () => {
    const manifest = readManifest(fixturePath("manifest_fixture.jsonl"));
    expect(manifest.records.length).toBe(expected.count);
    expect(manifest.records[0].id).toBe(expected.firstId);
    expect(manifest.records.map((r) => r.score)).toEqual(expected.scores);
    expect(manifest.config["tool"]).toBe("sdss");
  });

  it("round-trips through serialize and parse", () => {
    const manifest = readManifest(fixturePath("manifest_fixture.jsonl"));
    const again = parseManifest(serializeManifest(manifest));
    expect(again).toEqual(manifest);
  });

  it("keeps records sorted by score desc then id asc", () => {
    const text = serializeManifest({
      config: {},
      records: [
        { id: "b", score: 0.5, nImage: 1, nClass: {}, nCorrect: {}, paths: {} },
        { id: "a", score: 0.5, nImage: 1, nClass: {}, nCorrect: {}, paths: {} },
        { id: "z", score: 0.9, nImage: 1, nClass: {}, nCorrect: {}, paths: {} },
      ],
    });
    const ids = parseManifest(text).records.map((r) => r.id);
    expect(ids).toEqual(["z", "a", "b"]);
  });

  it("rejects duplicates and bad headers", () => {
    const record = { id: "a", score: 0.5, nImage: 1, nClass: {}, nCorrect: {}, paths: {} };
    expect(() => serializeManifest({ config: {}, records: [record, { ...record }] })).toThrow(
      ManifestError,
    );
    expect(() => parseManifest('{"format":"other","version":1}\n')).toThrow(ManifestError);
    expect(() => parseManifest("")).toThrow(ManifestError);
  });
});
