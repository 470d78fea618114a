#!/usr/bin/env node
/**
 * Render one figure from a JSON figure-spec file.
 *
 *   srpulse-figplot spec.json
 *
 * Relative paths inside the spec resolve against the spec file's
 * directory.  When the spec carries an "extract" directory, every
 * input table is re-serialized there byte-identically, so a figure can
 * always be traced back to the exact numbers it displays.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { basename, dirname, extname, resolve } from "node:path";

import { parseCsv, SchemaError, serializeTable } from "./csv.js";
import { FIGURE_KINDS, FigureKind, FigureSpec, render } from "./figures.js";

function fail(message: string): never {
  throw new SchemaError(message);
}

export function parseSpec(raw: unknown): FigureSpec {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    fail("spec must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  const kind = obj.kind;
  if (typeof kind !== "string" || !FIGURE_KINDS.includes(kind as FigureKind)) {
    fail(`spec.kind must be one of ${FIGURE_KINDS.join(", ")}`);
  }
  const inputs = obj.inputs;
  if (!Array.isArray(inputs) || inputs.length === 0 || !inputs.every((p) => typeof p === "string")) {
    fail("spec.inputs must be a non-empty array of paths");
  }
  if (typeof obj.output !== "string" || obj.output === "") {
    fail("spec.output must be a path");
  }
  const spec: FigureSpec = {
    kind: kind as FigureKind,
    inputs: inputs as string[],
    output: obj.output,
  };
  for (const key of ["title", "xLabel", "yLabel", "extract"] as const) {
    const v = obj[key];
    if (v !== undefined) {
      if (typeof v !== "string") fail(`spec.${key} must be a string`);
      spec[key] = v;
    }
  }
  for (const key of ["xRange", "yRange"] as const) {
    const v = obj[key];
    if (v !== undefined) {
      if (!Array.isArray(v) || v.length !== 2 || !v.every((n) => typeof n === "number")) {
        fail(`spec.${key} must be [lo, hi]`);
      }
      spec[key] = v as [number, number];
    }
  }
  if (obj.labels !== undefined) {
    if (!Array.isArray(obj.labels) || !obj.labels.every((s) => typeof s === "string")) {
      fail("spec.labels must be an array of strings");
    }
    spec.labels = obj.labels as string[];
  }
  const known = new Set([
    "kind", "inputs", "output", "labels", "title",
    "xLabel", "yLabel", "xRange", "yRange", "extract",
  ]);
  for (const key of Object.keys(obj)) {
    if (!known.has(key)) fail(`unknown spec field '${key}'`);
  }
  return spec;
}

export function runSpecFile(specPath: string): string {
  const base = dirname(resolve(specPath));
  const spec = parseSpec(JSON.parse(readFileSync(specPath, "utf8")));
  const inputPaths = spec.inputs.map((p) => resolve(base, p));
  const sources = inputPaths.map((p) => readFileSync(p, "utf8"));
  const tables = sources.map((text, i) => {
    try {
      return parseCsv(text);
    } catch (err) {
      fail(`${spec.inputs[i]}: ${(err as Error).message}`);
    }
  });
  const svg = render(spec, tables);
  const outPath = resolve(base, spec.output);
  mkdirSync(dirname(outPath), { recursive: true });
  writeFileSync(outPath, svg);
  if (spec.extract) {
    const dir = resolve(base, spec.extract);
    mkdirSync(dir, { recursive: true });
    const seen = new Map<string, number>();
    tables.forEach((table, i) => {
      // inputs from different run directories often share a basename
      const name = basename(inputPaths[i]);
      const count = (seen.get(name) ?? 0) + 1;
      seen.set(name, count);
      const ext = extname(name);
      const target =
        count === 1 ? name : `${name.slice(0, name.length - ext.length)}-${count}${ext}`;
      writeFileSync(resolve(dir, target), serializeTable(table));
    });
  }
  return outPath;
}

export function main(argv: string[]): number {
  if (argv.length !== 1 || argv[0] === "-h" || argv[0] === "--help") {
    process.stderr.write("usage: srpulse-figplot <spec.json>\n");
    return argv.length === 1 ? 0 : 2;
  }
  try {
    const out = runSpecFile(argv[0]);
    process.stdout.write(out + "\n");
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 2;
    }
    if (err instanceof Error && "code" in err) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("srpulse-figplot")) {
  process.exit(main(process.argv.slice(2)));
}
