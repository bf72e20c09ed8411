/** Stratified cross-validated accuracy of logistic regression after
 * filter-based feature selection.
 *
 * Selection is fit on the training folds only; the "raw" method keeps every
 * feature. All randomness flows from the seed, so reported accuracies are
 * reproducible.
 */

import { fitLogistic, predictLogistic } from "./logistic.js";
import {
  LOWER_IS_BETTER,
  ScoringMethod,
  score,
  selectTopK,
} from "./scoring.js";
import { mulberry32, shuffle } from "./rng.js";

export type EvalMethod = ScoringMethod | "raw";

/** Deterministic stratified fold assignment: per class, shuffled indices
 * are dealt round-robin. Returns fold id per instance. */
export function stratifiedFolds(
  y: number[],
  folds: number,
  seed: number,
): number[] {
  const rng = mulberry32(seed);
  const assignment = new Array<number>(y.length).fill(0);
  const classes = [...new Set(y)].sort((a, b) => a - b);
  let dealt = 0;
  for (const c of classes) {
    const idx = y.flatMap((v, i) => (v === c ? [i] : []));
    shuffle(idx, rng);
    for (const i of idx) {
      assignment[i] = dealt % folds;
      dealt++;
    }
  }
  return assignment;
}

function takeColumns(X: number[][], cols1based: number[]): number[][] {
  return X.map((row) => cols1based.map((j) => row[j - 1]));
}

export interface EvalResult {
  method: EvalMethod;
  k: number;
  folds: number;
  seed: number;
  foldAccuracies: number[];
  accuracy: number; // mean over folds, percent
}

export function evaluate(
  X: number[][],
  y: number[],
  method: EvalMethod,
  k: number,
  folds: number,
  seed: number,
): EvalResult {
  const nClasses = Math.max(...y);
  if (nClasses !== 2) {
    throw new Error("the evaluation harness trains binary classifiers only");
  }
  const assignment = stratifiedFolds(y, folds, seed);
  const foldAccuracies: number[] = [];
  for (let f = 0; f < folds; f++) {
    const trainIdx: number[] = [];
    const testIdx: number[] = [];
    assignment.forEach((a, i) => (a === f ? testIdx : trainIdx).push(i));
    let trainX = trainIdx.map((i) => X[i]);
    let testX = testIdx.map((i) => X[i]);
    const trainY = trainIdx.map((i) => y[i]);
    const testY = testIdx.map((i) => y[i]);
    if (method !== "raw") {
      const scores = score(method, trainX, trainY, nClasses, seed);
      const picked = selectTopK(scores, k, LOWER_IS_BETTER[method]);
      trainX = takeColumns(trainX, picked);
      testX = takeColumns(testX, picked);
    }
    const model = fitLogistic(trainX, trainY.map((v) => v - 1));
    const pred = predictLogistic(model, testX);
    let hits = 0;
    for (let i = 0; i < testY.length; i++) {
      if (pred[i] === testY[i] - 1) hits++;
    }
    foldAccuracies.push((100 * hits) / testY.length);
  }
  const accuracy =
    foldAccuracies.reduce((a, b) => a + b, 0) / foldAccuracies.length;
  return { method, k, folds, seed, foldAccuracies, accuracy };
}
