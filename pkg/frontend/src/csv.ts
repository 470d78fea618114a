/**
 * String-preserving CSV access.
 *
 * Cells are kept as the exact byte sequences read from disk so that
 * serializeTable(parseCsv(text)) === text for every file the toolkit
 * emits.  Numeric views are computed on demand and never written back.
 */

export class SchemaError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
  /** true when the source ended with a newline */
  trailingNewline: boolean;
}

export function parseCsv(text: string): Table {
  if (text.includes("\r")) {
    throw new SchemaError("carriage returns are not part of the CSV dialect");
  }
  const trailingNewline = text.endsWith("\n");
  const lines = (trailingNewline ? text.slice(0, -1) : text).split("\n");
  if (lines.length === 0 || lines[0] === "") {
    throw new SchemaError("empty file");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(`row ${i + 1} has ${cells.length} cells, expected ${header.length}`);
    }
    return cells;
  });
  return { header, rows, trailingNewline };
}

export function serializeTable(table: Table): string {
  const lines = [table.header.join(",")];
  for (const row of table.rows) lines.push(row.join(","));
  return lines.join("\n") + (table.trailingNewline ? "\n" : "");
}

export function column(table: Table, name: string): string[] {
  const i = table.header.indexOf(name);
  if (i < 0) throw new SchemaError(`missing column '${name}'`);
  return table.rows.map((row) => row[i]);
}

export function numericColumn(table: Table, name: string): number[] {
  return column(table, name).map((cell, row) => {
    const v = Number(cell);
    if (cell.trim() === "" || Number.isNaN(v)) {
      throw new SchemaError(`bad value in column '${name}' row ${row + 1}`);
    }
    return v;
  });
}

/** Column names whose every cell parses as a finite number. */
export function numericNames(table: Table): string[] {
  return table.header.filter((name) => {
    try {
      numericColumn(table, name);
      return true;
    } catch {
      return false;
    }
  });
}
