/** Markdown report assembly for accuracy comparisons. */

import { EvalResult } from "./crossval.js";

export interface DatasetReport {
  dataset: string;
  m: number;
  p: number;
  k: number;
  folds: number;
  seed: number;
  results: EvalResult[];
}

export function renderReport(reports: DatasetReport[]): string {
  const methods = ["raw", "ms-gini", "gi", "pcc", "mi"];
  const lines: string[] = [];
  lines.push("# Feature selection accuracy");
  lines.push("");
  lines.push(
    "| Data set | m | p | k | folds | " +
      methods.map((m) => m.toUpperCase()).join(" | ") +
      " |",
  );
  lines.push(
    "|" + new Array(5 + methods.length + 1).join("---|").replace(/\|$/, "|"),
  );
  for (const rep of reports) {
    const acc = methods.map((m) => {
      const r = rep.results.find((x) => x.method === m);
      return r ? `${r.accuracy.toFixed(2)}%` : "-";
    });
    lines.push(
      `| ${rep.dataset} | ${rep.m} | ${rep.p} | ${rep.k} | ${rep.folds} | ` +
        acc.join(" | ") +
        " |",
    );
  }
  lines.push("");
  return lines.join("\n");
}
