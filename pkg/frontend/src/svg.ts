/** Minimal SVG string builder; attribute order is insertion order. */

export type Attrs = Record<string, string | number>;

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
};

export function escapeXml(text: string): string {
  return text.replace(/[&<>"]/g, (c) => ESCAPES[c]);
}

export function fmt(v: number): string {
  if (!Number.isFinite(v)) throw new Error(`non-finite coordinate ${v}`);
  // fixed precision keeps output stable across platforms
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

function attrText(attrs: Attrs): string {
  const parts: string[] = [];
  for (const [key, value] of Object.entries(attrs)) {
    const text = typeof value === "number" ? fmt(value) : value;
    parts.push(` ${key}="${escapeXml(text)}"`);
  }
  return parts.join("");
}

export function el(tag: string, attrs: Attrs, children: string[] | string = []): string {
  const body = typeof children === "string" ? escapeXml(children) : children.join("");
  if (body === "") return `<${tag}${attrText(attrs)}/>`;
  return `<${tag}${attrText(attrs)}>${body}</${tag}>`;
}

export function svgDocument(width: number, height: number, children: string[]): string {
  const open =
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}"` +
    ` viewBox="0 0 ${width} ${height}" font-family="sans-serif">`;
  return open + children.join("") + "</svg>\n";
}

export function polyline(xs: number[], ys: number[], attrs: Attrs): string {
  const points = xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(" ");
  return el("polyline", { points, fill: "none", ...attrs });
}

export function text(x: number, y: number, content: string, attrs: Attrs = {}): string {
  return el("text", { x, y, "font-size": "11", ...attrs }, content);
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
