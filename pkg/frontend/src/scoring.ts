/** Feature scoring baselines for the filter method.
 *
 * Four scorers over a continuous feature column and integer labels 1..n:
 *
 *  - meanSplitGini: Gini impurity of the two-way split at the feature mean,
 *    values equal to the mean falling in the lower side, weighted by side
 *    size and normalized by the instance count. Empty sides contribute
 *    zero. Lower is better.
 *  - giniImpurity: the classical score that scans every midpoint between
 *    consecutive distinct sorted values and keeps the best (lowest)
 *    weighted impurity. Lower is better.
 *  - pearsonAbs: |Pearson correlation| against the label. Higher is better.
 *  - mutualInfo: k-nearest-neighbor estimate of the mutual information
 *    between the feature and the discrete label. Higher is better.
 */

import { gaussian, mulberry32 } from "./rng.js";
import { digamma, mean, pearson } from "./stats.js";

export type ScoringMethod = "ms-gini" | "gi" | "pcc" | "mi";

export const LOWER_IS_BETTER: Record<ScoringMethod, boolean> = {
  "ms-gini": true,
  gi: true,
  pcc: false,
  mi: false,
};

function classCounts(labels: number[], idx: number[], n: number): number[] {
  const counts = new Array(n).fill(0);
  for (const i of idx) counts[labels[i] - 1]++;
  return counts;
}

function giniOfCounts(counts: number[], total: number): number {
  if (total === 0) return 0;
  let sq = 0;
  for (const c of counts) sq += c * c;
  return total - sq / total;
}

export function meanSplitGini(values: number[], labels: number[], nClasses: number): number {
  const m = values.length;
  const theta = mean(values);
  const below: number[] = [];
  const above: number[] = [];
  for (let i = 0; i < m; i++) (values[i] <= theta ? below : above).push(i);
  const gBelow = giniOfCounts(classCounts(labels, below, nClasses), below.length);
  const gAbove = giniOfCounts(classCounts(labels, above, nClasses), above.length);
  return (gBelow + gAbove) / m;
}

export function giniImpurity(values: number[], labels: number[], nClasses: number): number {
  const m = values.length;
  const order = values.map((_, i) => i).sort((a, b) => values[a] - values[b]);
  const left = new Array(nClasses).fill(0);
  const right = classCounts(labels, order, nClasses);
  let best = giniOfCounts(right, m) / m; // no-split baseline (all on one side)
  let leftCount = 0;
  for (let pos = 0; pos < m - 1; pos++) {
    const i = order[pos];
    left[labels[i] - 1]++;
    right[labels[i] - 1]--;
    leftCount++;
    if (values[order[pos + 1]] === values[i]) continue; // not a distinct boundary
    const score =
      (giniOfCounts(left, leftCount) + giniOfCounts(right, m - leftCount)) / m;
    if (score < best) best = score;
  }
  return best;
}

export function pearsonAbs(values: number[], labels: number[]): number {
  return Math.abs(pearson(values, labels));
}

/** k-nearest-neighbor mutual information between a continuous variable and
 * a discrete label (Ross-style estimator, k = 3). A vanishing estimate is
 * clipped at zero. Ties are broken with a seeded, negligible jitter. */
export function mutualInfo(
  values: number[],
  labels: number[],
  nClasses: number,
  neighbors = 3,
  seed = 0,
): number {
  const m = values.length;
  const scaleNoise = 1e-10 * Math.max(1, Math.abs(mean(values)));
  const noise = gaussian(mulberry32(seed + 0x9e37));
  const x = values.map((v) => v + scaleNoise * noise());

  const radius = new Array<number>(m).fill(0);
  const kUsed = new Array<number>(m).fill(0);
  const classSize = new Array<number>(m).fill(0);
  for (let c = 1; c <= nClasses; c++) {
    const idx: number[] = [];
    for (let i = 0; i < m; i++) if (labels[i] === c) idx.push(i);
    if (idx.length < 2) continue; // singleton classes carry no estimate
    idx.sort((a, b) => x[a] - x[b]);
    const k = Math.min(neighbors, idx.length - 1);
    for (let pos = 0; pos < idx.length; pos++) {
      // k-th nearest same-class neighbor on a sorted line: best window of
      // k+1 consecutive points containing pos
      let bestR = Infinity;
      const lo = Math.max(0, pos - k);
      const hi = Math.min(idx.length - 1 - k, pos);
      for (let start = lo; start <= hi; start++) {
        const r = Math.max(
          x[idx[pos]] - x[idx[start]],
          x[idx[start + k]] - x[idx[pos]],
        );
        if (r < bestR) bestR = r;
      }
      radius[idx[pos]] = bestR;
      kUsed[idx[pos]] = k;
      classSize[idx[pos]] = idx.length;
    }
  }

  const sortedAll = [...x].sort((a, b) => a - b);
  const countWithin = (center: number, r: number): number => {
    // points with |x - center| <= r, inclusive of the point itself
    const lo = lowerBound(sortedAll, center - r);
    const hi = upperBound(sortedAll, center + r);
    return hi - lo;
  };

  let sum = 0;
  let used = 0;
  for (let i = 0; i < m; i++) {
    if (classSize[i] < 2) continue;
    const mi = countWithin(x[i], radius[i] * (1 + 1e-12)) - 1;
    sum +=
      digamma(m) +
      digamma(kUsed[i]) -
      digamma(classSize[i]) -
      digamma(Math.max(mi, 1));
    used++;
  }
  if (used === 0) return 0;
  return Math.max(sum / used, 0);
}

function lowerBound(sorted: number[], v: number): number {
  let lo = 0;
  let hi = sorted.length;
  while (lo < hi) {
    const mid = (lo + hi) >> 1;
    if (sorted[mid] < v) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

function upperBound(sorted: number[], v: number): number {
  let lo = 0;
  let hi = sorted.length;
  while (lo < hi) {
    const mid = (lo + hi) >> 1;
    if (sorted[mid] <= v) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

function column(X: number[][], j: number): number[] {
  return X.map((row) => row[j]);
}

/** Score every feature of X with the given method. */
export function score(
  method: ScoringMethod,
  X: number[][],
  y: number[],
  nClasses: number,
  seed = 0,
): number[] {
  const p = X[0].length;
  const out = new Array<number>(p);
  for (let j = 0; j < p; j++) {
    const col = column(X, j);
    switch (method) {
      case "ms-gini":
        out[j] = meanSplitGini(col, y, nClasses);
        break;
      case "gi":
        out[j] = giniImpurity(col, y, nClasses);
        break;
      case "pcc":
        out[j] = pearsonAbs(col, y);
        break;
      case "mi":
        out[j] = mutualInfo(col, y, nClasses, 3, seed + j);
        break;
    }
  }
  return out;
}

/** 1-based indices of the k best scores in selection order.
 *
 * Stable: equal scores resolve to the earliest index, matching the secure
 * runtime's first-minimum rule.
 */
export function selectTopK(
  scores: number[],
  k: number,
  lowerIsBetter = true,
): number[] {
  const order = scores
    .map((s, i) => [s, i] as const)
    .sort((a, b) => (lowerIsBetter ? a[0] - b[0] : b[0] - a[0]) || a[1] - b[1]);
  return order.slice(0, k).map(([, i]) => i + 1);
}
