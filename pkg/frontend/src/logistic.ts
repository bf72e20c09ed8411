/** Binary logistic regression with L2 regularization.
 *
 * Fits by iteratively reweighted least squares: the ridge-damped Newton
 * system is solved with a Cholesky factorization each step. The penalty
 * weights the squared coefficients (not the intercept) against the summed
 * log-loss, i.e. the conventional inverse-regularization parameterization
 * with C = 1 by default.
 */

import { columnStats } from "./stats.js";

export interface LogisticModel {
  weights: number[]; // per standardized feature
  intercept: number;
  means: number[];
  stds: number[];
}

function sigmoid(z: number): number {
  return z >= 0 ? 1 / (1 + Math.exp(-z)) : Math.exp(z) / (1 + Math.exp(z));
}

/** Solve A x = b for symmetric positive definite A (in place Cholesky). */
export function solveSpd(A: number[][], b: number[]): number[] {
  const n = b.length;
  const L = A.map((row) => [...row]);
  for (let j = 0; j < n; j++) {
    let d = L[j][j];
    for (let k = 0; k < j; k++) d -= L[j][k] * L[j][k];
    if (d <= 0) d = 1e-12; // numerical floor; system is ridge-damped anyway
    L[j][j] = Math.sqrt(d);
    for (let i = j + 1; i < n; i++) {
      let s = L[i][j];
      for (let k = 0; k < j; k++) s -= L[i][k] * L[j][k];
      L[i][j] = s / L[j][j];
    }
  }
  const y = new Array(n).fill(0);
  for (let i = 0; i < n; i++) {
    let s = b[i];
    for (let k = 0; k < i; k++) s -= L[i][k] * y[k];
    y[i] = s / L[i][i];
  }
  const x = new Array(n).fill(0);
  for (let i = n - 1; i >= 0; i--) {
    let s = y[i];
    for (let k = i + 1; k < n; k++) s -= L[k][i] * x[k];
    x[i] = s / L[i][i];
  }
  return x;
}

export function fitLogistic(
  X: number[][],
  y01: number[],
  c = 1.0,
  maxIter = 100,
  tol = 1e-8,
): LogisticModel {
  const m = X.length;
  const p = X[0].length;
  const { means, stds } = columnStats(X);
  const Z = X.map((row) =>
    row.map((v, j) => (stds[j] > 0 ? (v - means[j]) / stds[j] : 0)),
  );
  const lambda = 1 / c;
  // parameter vector: [w_1..w_p, intercept]
  const w = new Array(p + 1).fill(0);
  for (let iter = 0; iter < maxIter; iter++) {
    const probs = new Array(m);
    for (let i = 0; i < m; i++) {
      let z = w[p];
      for (let j = 0; j < p; j++) z += Z[i][j] * w[j];
      probs[i] = sigmoid(z);
    }
    // gradient and damped Hessian of summed loss + (lambda/2)||w||^2
    const g = new Array(p + 1).fill(0);
    const H: number[][] = Array.from({ length: p + 1 }, () =>
      new Array(p + 1).fill(0),
    );
    for (let i = 0; i < m; i++) {
      const diff = probs[i] - y01[i];
      const r = Math.max(probs[i] * (1 - probs[i]), 1e-10);
      for (let j = 0; j < p; j++) {
        g[j] += Z[i][j] * diff;
        for (let l = j; l < p; l++) H[j][l] += r * Z[i][j] * Z[i][l];
        H[j][p] += r * Z[i][j];
      }
      g[p] += diff;
      H[p][p] += r;
    }
    for (let j = 0; j < p; j++) {
      g[j] += lambda * w[j];
      H[j][j] += lambda;
      for (let l = j + 1; l < p + 1; l++) H[l][j] = H[j][l];
    }
    const step = solveSpd(H, g);
    let maxStep = 0;
    for (let j = 0; j < p + 1; j++) {
      w[j] -= step[j];
      maxStep = Math.max(maxStep, Math.abs(step[j]));
    }
    if (maxStep < tol) break;
  }
  return { weights: w.slice(0, p), intercept: w[p], means, stds };
}

export function predictLogistic(model: LogisticModel, X: number[][]): number[] {
  return X.map((row) => {
    let z = model.intercept;
    for (let j = 0; j < row.length; j++) {
      const v = model.stds[j] > 0 ? (row[j] - model.means[j]) / model.stds[j] : 0;
      z += v * model.weights[j];
    }
    return z > 0 ? 1 : 0;
  });
}
