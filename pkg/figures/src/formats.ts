/**
 * Parsers for the meanflow dump formats.
 *
 * Every parse error names the file, the 1-based line and the offending
 * field, so malformed artifacts fail loudly and precisely.
 */

export class FormatError extends Error {
  constructor(file: string, line: number, message: string) {
    super(`${file}: line ${line}: ${message}`);
    this.name = "FormatError";
  }
}

export interface FieldDump {
  dim: number;
  sizes: number[];
  ncomp: number;
  time: number;
  kind: string | null;
  /** per component, row-major over the grid */
  data: Float64Array[];
}

export interface ResidualRow {
  time: number;
  l2: number;
  linf: number;
}

export interface ResidualReport {
  equation: string;
  orientation: string;
  dim: number;
  grid: number[];
  dt: number;
  M: number;
  sigma: number;
  nu: number;
  extras: Record<string, string>;
  rows: ResidualRow[];
}

export interface ComparisonRow {
  M: number;
  time: number;
  relL2: number;
}

export interface ComparisonRecord {
  kind: string;
  meta: Record<string, string>;
  rows: ComparisonRow[];
}

function splitMeta(
  lines: string[],
  start: number,
  file: string,
): { meta: Record<string, string>; next: number } {
  const meta: Record<string, string> = {};
  let i = start;
  while (i < lines.length && lines[i].includes("=")) {
    const idx = lines[i].indexOf("=");
    meta[lines[i].slice(0, idx).trim()] = lines[i].slice(idx + 1).trim();
    i += 1;
  }
  return { meta, next: i };
}

function parseNumber(raw: string, file: string, line: number, field: string): number {
  const v = Number(raw);
  if (raw.trim() === "" || Number.isNaN(v)) {
    throw new FormatError(file, line, `field '${field}' is not a number: '${raw}'`);
  }
  return v;
}

export function parseField(text: string, file: string): FieldDump {
  const lines = text.split("\n");
  const head = (lines[0] ?? "").split(";").map((p) => p.trim());
  if (head[0] !== "torus-field v1" || head.length < 5) {
    throw new FormatError(file, 1, `bad header '${lines[0]}'`);
  }
  const dim = parseNumber(head[1], file, 1, "dim");
  const sizes = head[2].split("x").map((s) => parseNumber(s, file, 1, "sizes"));
  const ncomp = parseNumber(head[3], file, 1, "components");
  const time = parseNumber(head[4], file, 1, "time");
  const kind = head.length > 5 ? head[5] : null;
  if (sizes.length !== dim) {
    throw new FormatError(file, 1, `dim ${dim} inconsistent with sizes ${head[2]}`);
  }
  const npoints = sizes.reduce((a, b) => a * b, 1);
  const rows = lines.slice(1).filter((l) => l.trim() !== "");
  if (rows.length !== npoints) {
    throw new FormatError(file, rows.length + 1, `expected ${npoints} sample rows, found ${rows.length}`);
  }
  const data = Array.from({ length: ncomp }, () => new Float64Array(npoints));
  rows.forEach((row, i) => {
    const parts = row.split(",");
    if (parts.length !== ncomp) {
      throw new FormatError(file, i + 2, `expected ${ncomp} values, got ${parts.length}`);
    }
    parts.forEach((p, c) => {
      data[c][i] = parseNumber(p, file, i + 2, `component ${c}`);
    });
  });
  return { dim, sizes, ncomp, time, kind, data };
}

export function parseResidualReport(text: string, file: string): ResidualReport {
  const lines = text.split("\n");
  if (lines[0] !== "residual-report v1") {
    throw new FormatError(file, 1, `not a residual report: '${lines[0]}'`);
  }
  const { meta, next } = splitMeta(lines, 1, file);
  if (meta["columns"] !== "time,l2,linf") {
    throw new FormatError(file, next, "missing or bad 'columns' declaration");
  }
  const rows: ResidualRow[] = [];
  for (let i = next; i < lines.length; i += 1) {
    const ln = lines[i].trim();
    if (ln === "") continue;
    const parts = ln.split(",");
    if (parts.length !== 3) {
      throw new FormatError(file, i + 1, `expected 3 fields, got ${parts.length}`);
    }
    rows.push({
      time: parseNumber(parts[0], file, i + 1, "time"),
      l2: parseNumber(parts[1], file, i + 1, "l2"),
      linf: parseNumber(parts[2], file, i + 1, "linf"),
    });
  }
  const extras: Record<string, string> = {};
  for (const item of (meta["extras"] ?? "").split(";")) {
    const j = item.indexOf(":");
    if (j > 0) extras[item.slice(0, j)] = item.slice(j + 1);
  }
  return {
    equation: meta["equation"] ?? "?",
    orientation: meta["orientation"] ?? "n/a",
    dim: Number(meta["dim"] ?? "0"),
    grid: (meta["grid"] ?? "").split("x").map(Number),
    dt: Number(meta["dt"] ?? "0"),
    M: Number(meta["M"] ?? "0"),
    sigma: Number(meta["sigma"] ?? "0"),
    nu: Number(meta["nu"] ?? "0"),
    extras,
    rows,
  };
}

export function parseComparison(text: string, file: string): ComparisonRecord {
  const lines = text.split("\n");
  if (lines[0] !== "comparison v1") {
    throw new FormatError(file, 1, `not a comparison record: '${lines[0]}'`);
  }
  const { meta, next } = splitMeta(lines, 1, file);
  if (meta["columns"] !== "M,time,rel_l2") {
    throw new FormatError(file, next, "missing or bad 'columns' declaration");
  }
  const rows: ComparisonRow[] = [];
  for (let i = next; i < lines.length; i += 1) {
    const ln = lines[i].trim();
    if (ln === "") continue;
    const parts = ln.split(",");
    if (parts.length !== 3) {
      throw new FormatError(file, i + 1, `expected 3 fields, got ${parts.length}`);
    }
    rows.push({
      M: parseNumber(parts[0], file, i + 1, "M"),
      time: parseNumber(parts[1], file, i + 1, "time"),
      relL2: parseNumber(parts[2], file, i + 1, "rel_l2"),
    });
  }
  return { kind: meta["kind"] ?? "?", meta, rows };
}

export function parseManifest(text: string, file: string): Record<string, string> {
  const lines = text.split("\n");
  if (lines[0] !== "manifest v1") {
    throw new FormatError(file, 1, `not a manifest: '${lines[0]}'`);
  }
  return splitMeta(lines, 1, file).meta;
}
