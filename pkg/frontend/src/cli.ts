/** Command line entry points.
 *
 *   evaluate --dataset NAME|CSV --method raw|ms-gini|gi|pcc|mi [--k K]
 *            [--folds F] [--seed S] [--report out.md]
 *   fixtures [--out DIR] [--seed S]
 *
 * evaluate with --method all runs every scorer and prints the comparison
 * table; fixtures exports the oracle CSVs consumed by the secure runtime's
 * test suite.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { EvalMethod, EvalResult, evaluate } from "./crossval.js";
import { DATASETS, loadDataset } from "./data.js";
import { DEFAULT_SHAPES, exportFixtures } from "./fixtures.js";
import { DatasetReport, renderReport } from "./report.js";

function parseArgs(argv: string[]): { cmd: string; opts: Record<string, string> } {
  const [cmd, ...rest] = argv;
  const opts: Record<string, string> = {};
  for (let i = 0; i < rest.length; i++) {
    if (rest[i].startsWith("--")) {
      const key = rest[i].slice(2);
      const val = i + 1 < rest.length && !rest[i + 1].startsWith("--")
        ? rest[++i]
        : "true";
      opts[key] = val;
    }
  }
  return { cmd, opts };
}

function cmdEvaluate(opts: Record<string, string>): number {
  const name = opts.dataset;
  if (!name) {
    console.error("evaluate needs --dataset NAME or --dataset path.csv");
    return 2;
  }
  const ds = loadDataset(name);
  const spec = DATASETS[name];
  const k = Number(opts.k ?? spec?.k ?? Math.ceil(ds.X[0].length / 2));
  const folds = Number(opts.folds ?? spec?.folds ?? 10);
  const seed = Number(opts.seed ?? 1);
  const methodArg = (opts.method ?? "all") as EvalMethod | "all";
  const methods: EvalMethod[] =
    methodArg === "all" ? ["raw", "ms-gini", "gi", "pcc", "mi"] : [methodArg];
  const results: EvalResult[] = methods.map((m) => {
    const r = evaluate(ds.X, ds.y, m, k, folds, seed);
    console.log(
      `${name} ${m}: ${r.accuracy.toFixed(2)}% ` +
        `(k=${m === "raw" ? "-" : k}, folds=${folds}, seed=${seed})`,
    );
    return r;
  });
  if (opts.report) {
    const rep: DatasetReport = {
      dataset: name,
      m: ds.X.length,
      p: ds.X[0].length,
      k,
      folds,
      seed,
      results,
    };
    fs.writeFileSync(opts.report, renderReport([rep]));
    console.log(`wrote ${opts.report}`);
  }
  return 0;
}

function cmdFixtures(opts: Record<string, string>): number {
  const here = path.dirname(fileURLToPath(import.meta.url));
  const outDir = opts.out ?? path.resolve(here, "..", "fixtures");
  const seed = Number(opts.seed ?? 9000);
  const files = exportFixtures(DEFAULT_SHAPES, seed, outDir);
  for (const f of files) console.log(f);
  return 0;
}

export function main(argv: string[]): number {
  const { cmd, opts } = parseArgs(argv);
  try {
    switch (cmd) {
      case "evaluate":
        return cmdEvaluate(opts);
      case "fixtures":
        return cmdFixtures(opts);
      default:
        console.error("usage: cli.js <evaluate|fixtures> [--options]");
        return 2;
    }
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
