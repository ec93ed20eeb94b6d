import { describe, expect, it } from "vitest";

import { selectThreshold, selectTopPercent, topCount } from "../src/index.js";
import { loadFixture } from "./helpers.js";

interface SelectFixture {
  records: { id: string; score: number; nImage: number }[];
  selections: (
    | { mode: "threshold"; tauC: number; expectedIds: string[] }
    | { mode: "top_percent"; percent: number; expectedIds: string[] }
  )[];
}

describe("topCount", () => {
  it("reproduces the published counts at source scale", () => {
    expect(topCount(24966, 10)).toBe(2497);
    expect(topCount(24966, 30)).toBe(7490);
    expect(topCount(24966, 50)).toBe(12483);
    expect(topCount(24966, 70)).toBe(17476);
  });

  it("caps at the record count and validates the range", () => {
    expect(topCount(1, 100)).toBe(1);
    expect(() => topCount(10, 0)).toThrow(RangeError);
    expect(() => topCount(10, 100.1)).toThrow(RangeError);
  });
});

describe("selection parity", () => {
  const fixture = loadFixture<SelectFixture>("select_cases.json");

  it("agrees with the pipeline on every fixture selection", () => {
    for (const sel of fixture.selections) {
      const got =
        sel.mode === "threshold"
          ? selectThreshold(fixture.records, sel.tauC)
          : selectTopPercent(fixture.records, sel.percent);
      expect(
        got.map((r) => r.id),
        JSON.stringify(sel).slice(0, 60),
      ).toEqual(sel.expectedIds);
    }
  });

  it("thresholds strictly", () => {
    const records = [
      { id: "a", score: 0.3 },
      { id: "b", score: 0.31 },
    ];
    expect(selectThreshold(records, 0.3).map((r) => r.id)).toEqual(["b"]);
  });

  it("breaks ties at the cut by ascending id", () => {
    const records = [
      { id: "b", score: 0.5 },
      { id: "a", score: 0.5 },
      { id: "c", score: 0.9 },
      { id: "d", score: 0.5 },
    ];
    expect(selectTopPercent(records, 50).map((r) => r.id)).toEqual(["c", "a"]);
  });

  it("is invariant to input order", () => {
    const forward = fixture.records;
    const backward = [...fixture.records].reverse();
    expect(selectTopPercent(backward, 37).map((r) => r.id)).toEqual(
      selectTopPercent(forward, 37).map((r) => r.id),
    );
  });
});
