import { EmptyInputError, SampleRow, Summary, parseRawCsv, parseSummary } from "./schema";
import { locfResample, mean, percentile, uniformGrid } from "./stats";
import { Box, Svg, drawAxes, fmt, linearScale, ticks } from "./svg";

const COLORS: Record<string, string> = {
  nearest_frontier: "#1f77b4",
  distance_advantage: "#2ca02c",
  info_gain: "#d62728",
};
const FALLBACK_COLORS = ["#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
const CURVE_STEP_M = 2.0;

function colorFor(key: string, index: number): string {
  return COLORS[key] ?? FALLBACK_COLORS[index % FALLBACK_COLORS.length];
}

interface RunSeries {
  method: string;
  d: number[];
  coverage: number[];
  frontier: number[];
}

function groupRuns(rows: SampleRow[]): Map<string, RunSeries> {
  const runs = new Map<string, RunSeries>();
  for (const row of rows) {
    let run = runs.get(row.runId);
    if (!run) {
      run = { method: row.method, d: [], coverage: [], frontier: [] };
      runs.set(row.runId, run);
    }
    run.d.push(row.d);
    run.coverage.push(row.coverage);
    run.frontier.push(row.frontier);
  }
  return runs;
}

/** Coverage c(d) and frontier size f(d): mean line with a 10th-90th
 * percentile band per method, resampled onto a uniform distance grid. */
export function curvesFigure(csvPath: string): string {
  const rows = parseRawCsv(csvPath);
  const runs = groupRuns(rows);
  const byMethod = new Map<string, RunSeries[]>();
  for (const run of runs.values()) {
    const list = byMethod.get(run.method) ?? [];
    list.push(run);
    byMethod.set(run.method, list);
  }
  const methods = [...byMethod.keys()].sort();
  const dMax = Math.max(...[...runs.values()].map((r) => r.d[r.d.length - 1]));
  const grid = uniformGrid(dMax, CURVE_STEP_M);

  const svg = new Svg(820, 560);
  const panels: Array<{ box: Box; field: "coverage" | "frontier"; label: string }> = [
    { box: { x: 70, y: 30, w: 700, h: 210 }, field: "coverage", label: "coverage c(d) [cells]" },
    { box: { x: 70, y: 310, w: 700, h: 210 }, field: "frontier", label: "frontier size f(d) [cells]" },
  ];
  for (const panel of panels) {
    let vMax = 0;
    const stats = new Map<string, { m: number[]; lo: number[]; hi: number[] }>();
    for (const method of methods) {
      const series = byMethod.get(method)!;
      const resampled = series.map((r) => locfResample(r.d, r[panel.field], grid));
      const m: number[] = [];
      const lo: number[] = [];
      const hi: number[] = [];
      for (let i = 0; i < grid.length; i++) {
        const col = resampled.map((s) => s[i]);
        m.push(mean(col));
        lo.push(percentile(col, 10));
        hi.push(percentile(col, 90));
      }
      vMax = Math.max(vMax, ...hi);
      stats.set(method, { m, lo, hi });
    }
    const scale = linearScale(panel.box, 0, grid[grid.length - 1], 0, vMax);
    drawAxes(svg, panel.box, "distance traveled d [m]", panel.label);
    for (const t of ticks(0, grid[grid.length - 1])) {
      svg.text(scale.toX(t), panel.box.y + panel.box.h + 14, String(t), "middle");
    }
    for (const t of ticks(0, vMax)) {
      svg.text(panel.box.x - 6, scale.toY(t) + 4, String(t), "end");
    }
    methods.forEach((method, i) => {
      const { m, lo, hi } = stats.get(method)!;
      const color = colorFor(method, i);
      svg.band(
        grid.map((d, k) => [scale.toX(d), scale.toY(hi[k])] as [number, number]),
        grid.map((d, k) => [scale.toX(d), scale.toY(lo[k])] as [number, number]),
        color
      );
      const finalMean = panel.field === "coverage" ? ` data-final-c-mean="${m[m.length - 1]}"` : "";
      svg.polyline(
        grid.map((d, k) => [scale.toX(d), scale.toY(m[k])] as [number, number]),
        color,
        ` data-method="${method}"${finalMean}`
      );
      svg.text(panel.box.x + panel.box.w - 150, panel.box.y + 16 + 14 * i, method, "start", ` fill="${color}"`);
    });
  }
  return svg.finish();
}

interface LambdaPoint {
  lambda: number;
  mode: string;
  mean: number;
  std: number;
}

function lambdaPoints(summary: Summary): LambdaPoint[] {
  const points: LambdaPoint[] = [];
  for (const row of summary.rows) {
    const m = /^lambda=(-?[0-9.]+)\|mode=(\w+)$/.exec(row.sweep);
    if (m && row.method === "info_gain") {
      points.push({ lambda: Number(m[1]), mode: m[2], mean: row.mean_dT_m, std: row.std_dT_m });
    }
  }
  if (points.length === 0) {
    throw new EmptyInputError("summary contains no lambda-sweep rows");
  }
  return points;
}

/** Completion distance against gain affinity, one series per gain estimator,
 * with one-standard-deviation error bars. */
export function lambdaFigure(summaryPath: string): string {
  const summary = parseSummary(summaryPath);
  const points = lambdaPoints(summary);
  const modes = [...new Set(points.map((p) => p.mode))].sort();
  const lambdas = [...new Set(points.map((p) => p.lambda))].sort((a, b) => a - b);
  const yLo = Math.min(...points.map((p) => p.mean - p.std));
  const yHi = Math.max(...points.map((p) => p.mean + p.std));
  const svg = new Svg(640, 420);
  const box: Box = { x: 80, y: 40, w: 500, h: 300 };
  const scale = linearScale(box, lambdas[0], lambdas[lambdas.length - 1], yLo, yHi);
  drawAxes(svg, box, "gain affinity lambda", "completion distance d_T [m]");
  for (const t of lambdas) {
    svg.text(scale.toX(t), box.y + box.h + 14, String(t), "middle");
    svg.line(scale.toX(t), box.y + box.h, scale.toX(t), box.y + box.h + 3);
  }
  for (const t of ticks(yLo, yHi)) {
    svg.text(box.x - 6, scale.toY(t) + 4, String(t), "end");
  }
  const nf = summary.rows.find((r) => r.method === "nearest_frontier" && r.sweep === "");
  if (nf) {
    svg.line(box.x, scale.toY(nf.mean_dT_m), box.x + box.w, scale.toY(nf.mean_dT_m), "#999", 1);
    svg.text(box.x + 4, scale.toY(nf.mean_dT_m) - 4, "nearest frontier", "start", ' fill="#999"');
  }
  modes.forEach((mode, i) => {
    const series = points.filter((p) => p.mode === mode).sort((a, b) => a.lambda - b.lambda);
    const color = i === 0 ? "#d62728" : "#1f77b4";
    svg.polyline(
      series.map((p) => [scale.toX(p.lambda), scale.toY(p.mean)] as [number, number]),
      color,
      ` data-mode="${mode}"`
    );
    for (const p of series) {
      svg.line(scale.toX(p.lambda), scale.toY(p.mean - p.std), scale.toX(p.lambda), scale.toY(p.mean + p.std), color);
      svg.circle(
        scale.toX(p.lambda),
        scale.toY(p.mean),
        3,
        color,
        ` data-mode="${mode}" data-lambda="${p.lambda}" data-mean="${p.mean}"`
      );
    }
    svg.text(box.x + box.w - 120, box.y + 16 + 14 * i, `${mode} gain`, "start", ` fill="${color}"`);
  });
  return svg.finish();
}

/** Completion distance per method and prediction range c_p, as grouped bars
 * with one-standard-deviation whiskers. */
export function cpBarsFigure(summaryPath: string): string {
  const summary = parseSummary(summaryPath);
  const entries: Array<{ method: string; cp: string; mean: number; std: number }> = [];
  for (const row of summary.rows) {
    const m = /^cp=([0-9.]+|inf)$/.exec(row.sweep);
    if (m) entries.push({ method: row.method, cp: m[1], mean: row.mean_dT_m, std: row.std_dT_m });
  }
  if (entries.length === 0) {
    throw new EmptyInputError("summary contains no cp-sweep rows");
  }
  const methods = [...new Set(entries.map((e) => e.method))].sort();
  const cps = [...new Set(entries.map((e) => e.cp))].sort((a, b) => Number(a) - Number(b));
  const yHi = Math.max(...entries.map((e) => e.mean + e.std));
  const svg = new Svg(640, 420);
  const box: Box = { x: 80, y: 40, w: 500, h: 300 };
  const scale = linearScale(box, 0, 1, 0, yHi);
  drawAxes(svg, box, "prediction range c_p [cells]", "completion distance d_T [m]");
  for (const t of ticks(0, yHi)) {
    svg.text(box.x - 6, scale.toY(t) + 4, String(t), "end");
  }
  const groupW = box.w / cps.length;
  const barW = (groupW * 0.7) / methods.length;
  cps.forEach((cp, g) => {
    const gx = box.x + g * groupW + groupW * 0.15;
    svg.text(box.x + g * groupW + groupW / 2, box.y + box.h + 14, cp, "middle");
    methods.forEach((method, i) => {
      const e = entries.find((x) => x.method === method && x.cp === cp);
      if (!e) return;
      const x = gx + i * barW;
      const y = scale.toY(e.mean);
      svg.rect(
        x,
        y,
        barW - 2,
        box.y + box.h - y,
        colorFor(method, i),
        ` data-method="${method}" data-cp="${cp}" data-mean="${e.mean}"`
      );
      const cx = x + (barW - 2) / 2;
      svg.line(cx, scale.toY(e.mean - e.std), cx, scale.toY(e.mean + e.std), "#222");
    });
  });
  methods.forEach((method, i) => {
    svg.text(box.x + box.w - 150, box.y + 16 + 14 * i, method, "start", ` fill="${colorFor(method, i)}"`);
  });
  return svg.finish();
}

export type FigureKind = "curves" | "lambda_sweep" | "cp_bars";

export function render(kind: FigureKind, inputs: string[]): string {
  if (inputs.length === 0) {
    throw new EmptyInputError("no input files given");
  }
  switch (kind) {
    case "curves":
      return curvesFigure(inputs[0]);
    case "lambda_sweep":
      return lambdaFigure(inputs[0]);
    case "cp_bars":
      return cpBarsFigure(inputs[0]);
  }
}
