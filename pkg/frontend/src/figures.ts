/**
 * Figure renderers over the toolkit's delimited outputs.
 *
 * Each kind consumes only its documented CSV schema and performs no
 * computation beyond axis transforms, so a figure is a direct view of
 * the numbers on disk.  Output is plain SVG text, byte-stable for
 * identical inputs.
 */

import { numericColumn, numericNames, SchemaError, Table } from "./csv.js";
import { viridis } from "./color.js";
import { extent, linearScale, logScale, Scale, tickLabel } from "./scale.js";
import { el, PALETTE, polyline, svgDocument, text } from "./svg.js";

export const FIGURE_KINDS = ["line", "heatmap", "trend", "contrast"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  labels?: string[];
  title?: string;
  xLabel?: string;
  yLabel?: string;
  xRange?: [number, number];
  yRange?: [number, number];
  /** directory receiving byte-identical copies of the plotted tables */
  extract?: string;
}

const WIDTH = 620;
const HEIGHT = 420;
const MARGIN = { left: 70, right: 24, top: 34, bottom: 50 };

interface Frame {
  x: Scale;
  y: Scale;
  parts: string[];
}

function plotRight(extra = 0): number {
  return WIDTH - MARGIN.right - extra;
}

function frame(spec: FigureSpec, x: Scale, y: Scale, rightEdge: number): Frame {
  const parts: string[] = [];
  parts.push(el("rect", { x: 0, y: 0, width: WIDTH, height: HEIGHT, fill: "white" }));
  const [left, bottom, top] = [MARGIN.left, HEIGHT - MARGIN.bottom, MARGIN.top];
  for (const t of x.ticks) {
    const px = x(t);
    if (px < left - 0.5 || px > rightEdge + 0.5) continue;
    parts.push(polyline([px, px], [bottom, bottom + 4], { stroke: "black" }));
    parts.push(text(px, bottom + 16, tickLabel(t, x.log), { "text-anchor": "middle" }));
  }
  for (const t of y.ticks) {
    const py = y(t);
    if (py > bottom + 0.5 || py < top - 0.5) continue;
    parts.push(polyline([left - 4, left], [py, py], { stroke: "black" }));
    parts.push(
      text(left - 7, py + 3.5, tickLabel(t, y.log), { "text-anchor": "end" }),
    );
  }
  parts.push(
    polyline([left, left, rightEdge], [top, bottom, bottom], { stroke: "black" }),
  );
  if (spec.title) {
    parts.push(
      text((left + rightEdge) / 2, top - 12, spec.title, {
        "text-anchor": "middle",
        "font-size": "13",
      }),
    );
  }
  return { x, y, parts };
}

function axisTitles(parts: string[], xLabel: string, yLabel: string, rightEdge: number) {
  const cx = (MARGIN.left + rightEdge) / 2;
  parts.push(text(cx, HEIGHT - 12, xLabel, { "text-anchor": "middle", "font-size": "12" }));
  const cy = (MARGIN.top + HEIGHT - MARGIN.bottom) / 2;
  parts.push(
    el(
      "text",
      {
        x: 16,
        y: cy,
        "font-size": "12",
        "text-anchor": "middle",
        transform: `rotate(-90 16 ${cy.toFixed(2)})`,
      },
      yLabel,
    ),
  );
}

function legend(parts: string[], names: string[], rightEdge: number) {
  names.forEach((name, i) => {
    const y = MARGIN.top + 8 + 16 * i;
    const x = rightEdge - 130;
    parts.push(polyline([x, x + 18], [y, y], { stroke: PALETTE[i % PALETTE.length], "stroke-width": "2" }));
    parts.push(text(x + 24, y + 3.5, name, {}));
  });
}

function errorBar(parts: string[], px: number, y0: number, y1: number, color: string) {
  parts.push(polyline([px, px], [y0, y1], { stroke: color }));
  parts.push(polyline([px - 3, px + 3], [y0, y0], { stroke: color }));
  parts.push(polyline([px - 3, px + 3], [y1, y1], { stroke: color }));
}

function seriesLabel(spec: FigureSpec, i: number, fallback: string): string {
  if (spec.labels && i < spec.labels.length) return spec.labels[i];
  return fallback;
}

function meanMetric(table: Table): string {
  const name = numericNames(table).find((n) => n.startsWith("mean_"));
  if (!name) throw new SchemaError("missing column 'mean_*'");
  return name;
}

function domainY(spec: FigureSpec, lo: number, hi: number): [number, number] {
  if (spec.yRange) return spec.yRange;
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  const pad = (hi - lo) * 0.06;
  return [lo - pad, hi + pad];
}

function renderLine(spec: FigureSpec, tables: Table[]): string {
  interface Series {
    x: number[];
    y: number[];
    err?: number[];
    label: string;
  }
  const series: Series[] = tables.map((table, i) => {
    const names = numericNames(table);
    if (names.length === 0) throw new SchemaError("no numeric columns");
    const metric = meanMetric(table);
    const stdName = "std_" + metric.slice(5);
    return {
      x: numericColumn(table, names[0]),
      y: numericColumn(table, metric),
      err: table.header.includes(stdName) ? numericColumn(table, stdName) : undefined,
      label: seriesLabel(spec, i, metric.slice(5)),
    };
  });
  const metric = meanMetric(tables[0]);
  const allY = series.flatMap((s) => s.y);
  const useLog = metric.includes("infidelity") && allY.every((v) => v > 0);
  const right = plotRight();
  const xDomain = spec.xRange ?? extent(series.flatMap((s) => s.x));
  const x = linearScale(xDomain, [MARGIN.left, right]);
  const [lo, hi] = extent(allY);
  const y = useLog
    ? logScale(spec.yRange ?? [lo, hi], [HEIGHT - MARGIN.bottom, MARGIN.top])
    : linearScale(domainY(spec, lo, hi), [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const f = frame(spec, x, y, right);
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    if (s.err) {
      s.x.forEach((vx, k) => {
        if (!useLog || s.y[k] - s.err![k] > 0) {
          errorBar(f.parts, x(vx), y(s.y[k] - s.err![k]), y(s.y[k] + s.err![k]), color);
        }
      });
    }
    f.parts.push(polyline(s.x.map(x), s.y.map(y), { stroke: color, "stroke-width": "1.5" }));
  });
  const names = numericNames(tables[0]);
  axisTitles(f.parts, spec.xLabel ?? names[0], spec.yLabel ?? metric.slice(5), right);
  if (tables.length > 1 || spec.labels) {
    legend(f.parts, series.map((s) => s.label), right);
  }
  return svgDocument(WIDTH, HEIGHT, f.parts);
}

/** Cell edges from midpoints of sorted unique centres. */
function edges(centres: number[]): number[] {
  const result = [centres[0] - (centres[1] - centres[0]) / 2];
  for (let i = 1; i < centres.length; i++) {
    result.push((centres[i - 1] + centres[i]) / 2);
  }
  const n = centres.length;
  result.push(centres[n - 1] + (centres[n - 1] - centres[n - 2]) / 2);
  return result;
}

function renderHeatmap(spec: FigureSpec, tables: Table[]): string {
  if (tables.length !== 1) throw new SchemaError("heatmap takes exactly one input");
  const table = tables[0];
  const names = numericNames(table);
  if (names.length < 3) throw new SchemaError("missing column 'mean_*'");
  const xs = numericColumn(table, names[0]);
  const ys = numericColumn(table, names[1]);
  const metric = meanMetric(table);
  const vals = numericColumn(table, metric);
  const ux = [...new Set(xs)];
  const nx = ux.length;
  const ny = xs.length / nx;
  if (!Number.isInteger(ny) || ny < 2 || nx < 2) {
    throw new SchemaError("rows do not form a full grid");
  }
  const uy = Array.from({ length: ny }, (_, j) => ys[j * nx]);
  const [lo, hi] = extent(vals);
  const logColor = lo > 0 && hi / lo > 100;
  const t = (v: number) => {
    if (hi === lo) return 0.5;
    return logColor
      ? (Math.log10(v) - Math.log10(lo)) / (Math.log10(hi) - Math.log10(lo))
      : (v - lo) / (hi - lo);
  };
  const right = plotRight(66);
  const ex = edges(ux);
  const ey = edges(uy);
  const x = linearScale([ex[0], ex[nx]], [MARGIN.left, right]);
  const y = linearScale([ey[0], ey[ny]], [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const f = frame(spec, x, y, right);
  for (let j = 0; j < ny; j++) {
    for (let i = 0; i < nx; i++) {
      const x0 = x(ex[i]);
      const y1 = y(ey[j + 1]);
      f.parts.push(
        el("rect", {
          x: x0,
          y: y1,
          width: x(ex[i + 1]) - x0,
          height: y(ey[j]) - y1,
          fill: viridis(t(vals[j * nx + i])),
        }),
      );
    }
  }
  const barX = right + 18;
  const barTop = MARGIN.top;
  const barH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const steps = 48;
  for (let k = 0; k < steps; k++) {
    f.parts.push(
      el("rect", {
        x: barX,
        y: barTop + barH - ((k + 1) * barH) / steps,
        width: 14,
        height: barH / steps + 0.5,
        fill: viridis(k / (steps - 1)),
      }),
    );
  }
  f.parts.push(text(barX + 18, barTop + barH + 3, tickLabel(lo, false), {}));
  f.parts.push(text(barX + 18, barTop + 8, tickLabel(hi, false), {}));
  f.parts.push(
    el(
      "text",
      {
        x: barX + 44,
        y: barTop + barH / 2,
        "font-size": "11",
        "text-anchor": "middle",
        transform: `rotate(-90 ${(barX + 44).toFixed(2)} ${(barTop + barH / 2).toFixed(2)})`,
      },
      metric.slice(5) + (logColor ? " (log)" : ""),
    ),
  );
  axisTitles(f.parts, spec.xLabel ?? names[0], spec.yLabel ?? names[1], right);
  return svgDocument(WIDTH, HEIGHT, f.parts);
}

function renderTrend(spec: FigureSpec, tables: Table[]): string {
  const series = tables.map((table, i) => ({
    rms: numericColumn(table, "rms"),
    mean: numericColumn(table, "mean_area"),
    std: numericColumn(table, "std_area"),
    label: seriesLabel(spec, i, `series ${i + 1}`),
  }));
  const right = plotRight();
  const x = linearScale(
    spec.xRange ?? extent(series.flatMap((s) => s.rms)),
    [MARGIN.left, right],
  );
  const hi = Math.max(...series.flatMap((s) => s.mean.map((m, k) => m + s.std[k])));
  const y = linearScale(domainY(spec, 0, hi), [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const f = frame(spec, x, y, right);
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    s.rms.forEach((r, k) => {
      errorBar(f.parts, x(r), y(s.mean[k] - s.std[k]), y(s.mean[k] + s.std[k]), color);
      f.parts.push(el("circle", { cx: x(r), cy: y(s.mean[k]), r: 3, fill: color }));
    });
    f.parts.push(polyline(s.rms.map(x), s.mean.map(y), { stroke: color, "stroke-width": "1.5" }));
  });
  axisTitles(f.parts, spec.xLabel ?? "time-noise RMS", spec.yLabel ?? "effective area", right);
  if (tables.length > 1 || spec.labels) {
    legend(f.parts, series.map((s) => s.label), right);
  }
  return svgDocument(WIDTH, HEIGHT, f.parts);
}

function renderContrast(spec: FigureSpec, tables: Table[]): string {
  const series = tables.map((table, i) => ({
    w: numericColumn(table, "width"),
    c: numericColumn(table, "contrast"),
    label: seriesLabel(spec, i, `series ${i + 1}`),
  }));
  const right = plotRight();
  const x = linearScale(
    spec.xRange ?? extent(series.flatMap((s) => s.w)),
    [MARGIN.left, right],
  );
  const y = linearScale(spec.yRange ?? [0, 1.05], [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const f = frame(spec, x, y, right);
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    s.w.forEach((w, k) => {
      f.parts.push(el("circle", { cx: x(w), cy: y(s.c[k]), r: 3, fill: color }));
    });
    f.parts.push(polyline(s.w.map(x), s.c.map(y), { stroke: color, "stroke-width": "1.5" }));
  });
  axisTitles(f.parts, spec.xLabel ?? "channel width", spec.yLabel ?? "contrast", right);
  if (tables.length > 1 || spec.labels) {
    legend(f.parts, series.map((s) => s.label), right);
  }
  return svgDocument(WIDTH, HEIGHT, f.parts);
}

const RENDERERS: Record<FigureKind, (spec: FigureSpec, tables: Table[]) => string> = {
  line: renderLine,
  heatmap: renderHeatmap,
  trend: renderTrend,
  contrast: renderContrast,
};

export function render(spec: FigureSpec, tables: Table[]): string {
  if (!FIGURE_KINDS.includes(spec.kind)) {
    throw new SchemaError(`unknown figure kind '${spec.kind}'`);
  }
  if (tables.length === 0) throw new SchemaError("no input tables");
  return RENDERERS[spec.kind](spec, tables);
}
