/** Minimal deterministic SVG emitter: plain strings, fixed precision, no
 * timestamps or generated ids, so identical inputs give identical bytes. */

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export function fmt(x: number): string {
  return Number(x.toFixed(2)).toString();
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`
    );
    this.parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  }

  raw(s: string): void {
    this.parts.push(s);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#444", width = 1): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"/>`
    );
  }

  polyline(pts: Array<[number, number]>, stroke: string, attrs = ""): void {
    const p = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(`<polyline points="${p}" fill="none" stroke="${stroke}" stroke-width="1.5"${attrs}/>`);
  }

  band(upper: Array<[number, number]>, lower: Array<[number, number]>, fill: string): void {
    const pts = [...upper, ...[...lower].reverse()];
    const p = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(`<polygon points="${p}" fill="${fill}" fill-opacity="0.25" stroke="none"/>`);
  }

  circle(x: number, y: number, r: number, fill: string, attrs = ""): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"${attrs}/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, attrs = ""): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"${attrs}/>`
    );
  }

  text(x: number, y: number, s: string, anchor = "start", attrs = ""): void {
    this.parts.push(`<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}"${attrs}>${s}</text>`);
  }

  finish(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export interface Scale {
  toX(v: number): number;
  toY(v: number): number;
}

export function linearScale(box: Box, x0: number, x1: number, y0: number, y1: number): Scale {
  const sx = box.w / (x1 - x0 || 1);
  const sy = box.h / (y1 - y0 || 1);
  return {
    toX: (v: number) => box.x + (v - x0) * sx,
    toY: (v: number) => box.y + box.h - (v - y0) * sy,
  };
}

export function drawAxes(svg: Svg, box: Box, xLabel: string, yLabel: string): void {
  svg.line(box.x, box.y, box.x, box.y + box.h);
  svg.line(box.x, box.y + box.h, box.x + box.w, box.y + box.h);
  svg.text(box.x + box.w / 2, box.y + box.h + 28, xLabel, "middle");
  svg.text(box.x - 34, box.y - 8, yLabel, "start");
}

export function ticks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const mult = span / n / step >= 5 ? 5 : span / n / step >= 2 ? 2 : 1;
  const s = step * mult;
  const out: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-9; v += s) out.push(Number(v.toFixed(10)));
  return out;
}
