export { column, numericColumn, numericNames, parseCsv, SchemaError, serializeTable } from "./csv.js";
export type { Table } from "./csv.js";
export { FIGURE_KINDS, render } from "./figures.js";
export type { FigureKind, FigureSpec } from "./figures.js";
export { main, parseSpec, runSpecFile } from "./cli.js";
export { viridis } from "./color.js";
export { extent, linearScale, logScale, tickLabel } from "./scale.js";
