export function mean(values: number[]): number {
  let s = 0;
  for (const v of values) s += v;
  return s / values.length;
}

/** Linear-interpolation percentile over a sorted copy (numpy default). */
export function percentile(values: number[], q: number): number {
  const sorted = [...values].sort((a, b) => a - b);
  const idx = ((sorted.length - 1) * q) / 100;
  const lo = Math.floor(idx);
  const frac = idx - lo;
  if (lo + 1 >= sorted.length) return sorted[sorted.length - 1];
  return sorted[lo] * (1 - frac) + sorted[lo + 1] * frac;
}

/** Last-observation-carried-forward resampling onto a uniform grid. */
export function locfResample(distances: number[], values: number[], grid: number[]): number[] {
  const out = new Array<number>(grid.length);
  let j = 0;
  for (let i = 0; i < grid.length; i++) {
    while (j + 1 < distances.length && distances[j + 1] <= grid[i]) j++;
    out[i] = values[j];
  }
  return out;
}

export function uniformGrid(dMax: number, step: number): number[] {
  const n = Math.floor(dMax / step) + 2;
  const grid = new Array<number>(n);
  for (let i = 0; i < n; i++) grid[i] = i * step;
  return grid;
}
