/** Axis scales and tick placement. */

export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
  ticks: number[];
  log: boolean;
}

function niceStep(span: number, target: number): number {
  const raw = span / Math.max(target, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= raw) return m * mag;
  }
  return 10 * mag;
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
  tickTarget = 5,
): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 0.5;
    d1 += 0.5;
  }
  const k = (range[1] - range[0]) / (d1 - d0);
  const scale = ((v: number) => range[0] + (v - d0) * k) as Scale;
  const step = niceStep(d1 - d0, tickTarget);
  const ticks: number[] = [];
  for (let t = Math.ceil(d0 / step) * step; t <= d1 + 1e-12 * step; t += step) {
    ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  scale.domain = [d0, d1];
  scale.range = range;
  scale.ticks = ticks;
  scale.log = false;
  return scale;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  if (d0 <= 0 || d1 <= 0) throw new Error("log scale needs a positive domain");
  let [l0, l1] = [Math.log10(d0), Math.log10(d1)];
  if (l0 === l1) {
    l0 -= 0.5;
    l1 += 0.5;
  }
  const k = (range[1] - range[0]) / (l1 - l0);
  const scale = ((v: number) => range[0] + (Math.log10(v) - l0) * k) as Scale;
  const ticks: number[] = [];
  for (let e = Math.ceil(l0 - 1e-9); e <= l1 + 1e-9; e += 1) {
    ticks.push(Math.pow(10, e));
  }
  scale.domain = [d0, d1];
  scale.range = range;
  scale.ticks = ticks;
  scale.log = true;
  return scale;
}

export function tickLabel(value: number, log: boolean): string {
  if (log) {
    const e = Math.round(Math.log10(value));
    return `1e${e}`;
  }
  if (value === 0) return "0";
  const a = Math.abs(value);
  if (a >= 1e4 || a < 1e-3) return value.toExponential(1).replace("e+", "e");
  return String(parseFloat(value.toPrecision(6)));
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) throw new Error("no values");
  return [lo, hi];
}
