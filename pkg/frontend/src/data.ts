/** Dataset loading for the accuracy benchmarks.
 *
 * The three benchmark datasets are third-party downloads and are not
 * vendored; they must be converted to the labeled-CSV layout (feature
 * columns, final integer label column in 1..n) and dropped under
 * frontend/data/. Loading a missing dataset raises with per-dataset fetch
 * instructions.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

export interface Dataset {
  X: number[][];
  y: number[];
  names: string[];
  nClasses: number;
}

export interface DatasetSpec {
  file: string;
  m: number;
  p: number;
  k: number;
  folds: number;
  fetch: string;
}

export const DATASETS: Record<string, DatasetSpec> = {
  cogload: {
    file: "cogload.csv",
    m: 632,
    p: 120,
    k: 12,
    folds: 6,
    fetch:
      "Cognitive Load Detection challenge data (ubittention 2020): request the " +
      "challenge archive, merge the per-participant physiological features into " +
      "632 rows x 120 features, append the binary task label as 1/2.",
  },
  lsvt: {
    file: "lsvt.csv",
    m: 126,
    p: 310,
    k: 103,
    folds: 10,
    fetch:
      "LSVT Voice Rehabilitation (UCI repository, id 282): download " +
      "LSVT_voice_rehabilitation.xlsx, export the Data sheet as CSV, append " +
      "the binary acceptable/unacceptable label column as 1/2.",
  },
  speed: {
    file: "speed.csv",
    m: 8378,
    p: 122,
    k: 67,
    folds: 10,
    fetch:
      "Speed Dating (OpenML dataset 40536): export as CSV, one-hot/ordinal " +
      "encode to 122 numeric features, append the match label as 1/2.",
  },
};

export function dataDir(): string {
  const here = path.dirname(fileURLToPath(import.meta.url));
  return path.resolve(here, "..", "data");
}

export function datasetPath(name: string): string {
  const spec = DATASETS[name];
  if (!spec) throw new Error(`unknown dataset '${name}'`);
  return path.join(dataDir(), spec.file);
}

export function datasetAvailable(name: string): boolean {
  return fs.existsSync(datasetPath(name));
}

export function loadCsv(file: string): Dataset {
  const text = fs.readFileSync(file, "utf-8").trim();
  const lines = text.split(/\r?\n/);
  const header = lines[0].split(",");
  const names = header.slice(0, -1);
  const X: number[][] = [];
  const y: number[] = [];
  for (let r = 1; r < lines.length; r++) {
    if (!lines[r]) continue;
    const parts = lines[r].split(",");
    if (parts.length !== header.length) {
      throw new Error(`${file}: row ${r + 1} has ${parts.length} fields, expected ${header.length}`);
    }
    const row = parts.slice(0, -1).map((v, c) => {
      const x = Number(v);
      if (!Number.isFinite(x)) {
        throw new Error(`${file}: row ${r + 1}, column ${c + 1}: not a number: ${v}`);
      }
      return x;
    });
    const label = Number(parts[parts.length - 1]);
    if (!Number.isInteger(label) || label < 1) {
      throw new Error(`${file}: row ${r + 1}: bad label ${parts[parts.length - 1]}`);
    }
    X.push(row);
    y.push(label);
  }
  return { X, y, names, nClasses: Math.max(...y) };
}

export function loadDataset(name: string): Dataset {
  const spec = DATASETS[name];
  if (!spec) {
    return loadCsv(name); // treat as a path to a local CSV
  }
  const file = datasetPath(name);
  if (!fs.existsSync(file)) {
    throw new Error(
      `dataset '${name}' not found at ${file}.\nTo fetch it: ${spec.fetch}`,
    );
  }
  const ds = loadCsv(file);
  if (ds.X.length !== spec.m || ds.X[0].length !== spec.p) {
    throw new Error(
      `dataset '${name}' has shape ${ds.X.length}x${ds.X[0].length}, ` +
        `expected ${spec.m}x${spec.p}`,
    );
  }
  return ds;
}
