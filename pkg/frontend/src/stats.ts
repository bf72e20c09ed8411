/** Small numeric helpers shared by the scorers. */

export function mean(xs: ArrayLike<number>): number {
  let s = 0;
  for (let i = 0; i < xs.length; i++) s += xs[i];
  return s / xs.length;
}

export function std(xs: ArrayLike<number>): number {
  const m = mean(xs);
  let s = 0;
  for (let i = 0; i < xs.length; i++) s += (xs[i] - m) * (xs[i] - m);
  return Math.sqrt(s / xs.length);
}

/** Pearson correlation coefficient; 0 when either side is constant. */
export function pearson(xs: ArrayLike<number>, ys: ArrayLike<number>): number {
  const mx = mean(xs);
  const my = mean(ys);
  let sxy = 0;
  let sxx = 0;
  let syy = 0;
  for (let i = 0; i < xs.length; i++) {
    const dx = xs[i] - mx;
    const dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx === 0 || syy === 0) return 0;
  return sxy / Math.sqrt(sxx * syy);
}

/** Digamma function via upward recurrence into the asymptotic regime. */
export function digamma(x: number): number {
  let result = 0;
  while (x < 6) {
    result -= 1 / x;
    x += 1;
  }
  const inv = 1 / x;
  const inv2 = inv * inv;
  result +=
    Math.log(x) -
    0.5 * inv -
    inv2 * (1 / 12 - inv2 * (1 / 120 - inv2 / 252));
  return result;
}

/** Column means and standard deviations of a row-major matrix. */
export function columnStats(X: number[][]): { means: number[]; stds: number[] } {
  const p = X[0].length;
  const means = new Array(p).fill(0);
  const stds = new Array(p).fill(0);
  for (const row of X) for (let j = 0; j < p; j++) means[j] += row[j];
  for (let j = 0; j < p; j++) means[j] /= X.length;
  for (const row of X)
    for (let j = 0; j < p; j++) stds[j] += (row[j] - means[j]) ** 2;
  for (let j = 0; j < p; j++) stds[j] = Math.sqrt(stds[j] / X.length);
  return { means, stds };
}
