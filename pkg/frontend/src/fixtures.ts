/** Oracle fixture generation for the secure runtime's integration tests.
 *
 * A fixture is a CSV holding a synthetic labeled dataset together with its
 * mean-split Gini scores and the expected selection, so the secure pipeline
 * can be replayed against precomputed plaintext answers:
 *
 *   row 0: m,p,k,n,seed      row 1: the values
 *   rows 2..m+1: feature rows
 *   row m+2: labels    row m+3: scores    row m+4: selected indices
 *
 * Instances are resampled until the selection is numerically robust: every
 * class occurs, no value sits on a column mean, and the top k+1 scores are
 * pairwise separated by more than 0.02.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { gaussian, mulberry32, randInt } from "./rng.js";
import { mean } from "./stats.js";
import { meanSplitGini, selectTopK } from "./scoring.js";

export interface FixtureShape {
  m: number;
  p: number;
  k: number;
  n: number;
}

export interface Fixture extends FixtureShape {
  seed: number;
  X: number[][];
  y: number[];
  scores: number[];
  indices: number[];
}

const MIN_GAP = 0.02;
// keep every value clear of its column mean by more than the secure
// threshold's one-ulp ambiguity at 16 fractional bits
const MEAN_CLEARANCE = 1e-4;

function robust(X: number[][], y: number[], shape: FixtureShape): number[] | null {
  const { p, k, n } = shape;
  const present = new Set(y);
  for (let c = 1; c <= n; c++) if (!present.has(c)) return null;
  for (let j = 0; j < p; j++) {
    const col = X.map((r) => r[j]);
    const theta = mean(col);
    if (col.some((v) => Math.abs(v - theta) < MEAN_CLEARANCE)) return null;
  }
  const scores = X[0].map((_, j) =>
    meanSplitGini(X.map((r) => r[j]), y, n),
  );
  const ordered = [...scores].sort((a, b) => a - b);
  for (let i = 0; i < Math.min(k + 1, p) - 1; i++) {
    if (ordered[i + 1] - ordered[i] <= MIN_GAP) return null;
  }
  return scores;
}

export function generateFixture(shape: FixtureShape, seed: number): Fixture {
  const rng = mulberry32(seed);
  const gauss = gaussian(rng);
  for (let attempt = 0; attempt < 10_000; attempt++) {
    // graded class separation per column spreads the scores apart, so
    // instances with clearly ranked features exist at every shape
    const strength = Array.from(
      { length: shape.p },
      (_, j) => (2.5 * j) / shape.p,
    );
    const y = Array.from({ length: shape.m }, () => 1 + randInt(rng, shape.n));
    const X = Array.from({ length: shape.m }, (_, i) =>
      Array.from({ length: shape.p }, (_, j) => {
        const signal = strength[j] * (y[i] - (shape.n + 1) / 2);
        return Math.round((gauss() + signal) * 2000) / 1000;
      }),
    );
    const scores = robust(X, y, shape);
    if (!scores) continue;
    const indices = selectTopK(scores, shape.k, true);
    return { ...shape, seed, X, y, scores, indices };
  }
  throw new Error(`no robust instance found for ${JSON.stringify(shape)}`);
}

export function fixtureToCsv(f: Fixture): string {
  const lines: string[] = [];
  lines.push("m,p,k,n,seed");
  lines.push([f.m, f.p, f.k, f.n, f.seed].join(","));
  for (const row of f.X) lines.push(row.map((v) => v.toString()).join(","));
  lines.push(f.y.join(","));
  lines.push(f.scores.map((s) => s.toPrecision(17)).join(","));
  lines.push(f.indices.join(","));
  return lines.join("\n") + "\n";
}

export function exportFixtures(
  shapes: FixtureShape[],
  seed: number,
  outDir: string,
): string[] {
  fs.mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  shapes.forEach((shape, i) => {
    const fixture = generateFixture(shape, seed + i);
    const name = `fixture-m${shape.m}-p${shape.p}-k${shape.k}-n${shape.n}-s${seed + i}.csv`;
    const file = path.join(outDir, name);
    fs.writeFileSync(file, fixtureToCsv(fixture));
    written.push(file);
  });
  return written;
}

export const DEFAULT_SHAPES: FixtureShape[] = [
  { m: 8, p: 4, k: 2, n: 2 },
  { m: 16, p: 6, k: 3, n: 2 },
  { m: 24, p: 5, k: 2, n: 3 },
  { m: 32, p: 8, k: 4, n: 2 },
  { m: 48, p: 7, k: 3, n: 3 },
  { m: 64, p: 10, k: 5, n: 2 },
];
