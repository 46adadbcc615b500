/** Least-squares line fits used for convergence-rate annotations. */

export function leastSquaresSlope(xs: number[], ys: number[]): number {
  if (xs.length !== ys.length || xs.length < 2) {
    throw new Error(`slope fit needs >= 2 aligned points, got ${xs.length}/${ys.length}`);
  }
  const n = xs.length;
  const mx = xs.reduce((a, b) => a + b, 0) / n;
  const my = ys.reduce((a, b) => a + b, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i += 1) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) ** 2;
  }
  if (den === 0) throw new Error("slope fit is degenerate: all x equal");
  return num / den;
}

/** Slope of log(y) against log(x); requires positive data. */
export function logLogSlope(xs: number[], ys: number[]): number {
  if (xs.some((x) => x <= 0) || ys.some((y) => y <= 0)) {
    throw new Error("log-log fit requires positive values");
  }
  return leastSquaresSlope(xs.map(Math.log), ys.map(Math.log));
}
