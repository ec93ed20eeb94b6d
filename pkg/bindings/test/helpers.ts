import { readFileSync } from "node:fs";

import type { LabelArray } from "../src/index.js";

export function loadFixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

export function fixturePath(name: string): string {
  return new URL(`./fixtures/${name}`, import.meta.url).pathname;
}

export function toLabels(values: number[], numClasses: number): LabelArray {
  return numClasses <= 254 ? Uint8Array.from(values) : Uint16Array.from(values);
}

export interface LabelCase {
  width: number;
  height: number;
  numClasses: number;
  ignore: number;
  pseudo: number[];
  gt: number[];
  expected: number[];
}
