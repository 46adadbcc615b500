/**
 * Figure generation from meanflow artifacts.
 *
 * Reads the dumped reports and fields (never recomputes physics) and writes
 * deterministic SVG plots:
 *
 *   residual     residual norms vs time, from a residual-report file
 *   convergence  final-time oracle error vs M, log-log, fitted slope annotated
 *   comparison   oracle error vs time, one curve per ensemble size
 *   snapshot     field dump as a magnitude map with a quiver overlay
 *
 * Usage:
 *   tsx src/plot_report.ts <run-dir> [--out DIR]
 *   tsx src/plot_report.ts <file> --kind residual|convergence|snapshot|comparison [--out DIR]
 */

import { readFileSync, readdirSync, writeFileSync, mkdirSync, statSync } from "fs";
import * as path from "path";

import {
  FormatError,
  parseComparison,
  parseField,
  parseManifest,
  parseResidualReport,
} from "./formats.js";
import { logLogSlope } from "./fit.js";
import { heatQuiver, linePlot } from "./svg.js";

export type PlotKind = "residual" | "convergence" | "snapshot" | "comparison";

export interface PlotResult {
  file: string;
  kind: PlotKind;
  /** fitted log-log slope, for convergence plots */
  slope?: number;
}

function captionFor(sourceFile: string, configHash: string | null): string {
  const base = path.basename(sourceFile);
  return configHash ? `${base}  |  config ${configHash}` : base;
}

export function plotResidual(file: string, outDir: string,
                             configHash: string | null = null): PlotResult {
  const rep = parseResidualReport(readFileSync(file, "utf8"), file);
  const svg = linePlot({
    title: `${rep.equation} residual (${rep.orientation})`,
    caption: captionFor(file, configHash),
    xLabel: "time",
    yLabel: "residual norm",
    yLog: rep.rows.every((r) => r.l2 > 0 && r.linf > 0),
    series: [
      { label: "L2", points: rep.rows.map((r) => ({ x: r.time, y: r.l2 })) },
      { label: "Linf", points: rep.rows.map((r) => ({ x: r.time, y: r.linf })) },
    ],
    annotations: rep.M > 0 ? [`M = ${rep.M}, grid ${rep.grid.join("x")}`] : [`grid ${rep.grid.join("x")}`],
  });
  const out = writePlot(outDir, file, "residual", svg);
  return { file: out, kind: "residual" };
}

export function plotConvergence(file: string, outDir: string,
                                configHash: string | null = null): PlotResult {
  const rec = parseComparison(readFileSync(file, "utf8"), file);
  const byM = new Map<number, { time: number; relL2: number }[]>();
  for (const r of rec.rows) {
    if (!byM.has(r.M)) byM.set(r.M, []);
    byM.get(r.M)!.push({ time: r.time, relL2: r.relL2 });
  }
  const Ms = [...byM.keys()].sort((a, b) => a - b);
  const finals = Ms.map((M) => {
    const rows = byM.get(M)!;
    return rows[rows.length - 1].relL2;
  });
  let slope: number | undefined;
  let annotations: string[] = [];
  if (Ms.length >= 2 && finals.every((e) => e > 0) && Ms.every((m) => m > 0)) {
    slope = logLogSlope(Ms, finals);
    annotations = [`fitted slope = ${slope.toFixed(3)}`, "reference rate M^(-1/2)"];
  }
  const svg = linePlot({
    title: `oracle error vs ensemble size (${rec.kind})`,
    caption: captionFor(file, configHash),
    xLabel: "M",
    yLabel: "relative L2 error at final time",
    xLog: true,
    yLog: true,
    series: [{ label: "final-time error", points: Ms.map((M, i) => ({ x: M, y: finals[i] })) }],
    annotations,
  });
  const out = writePlot(outDir, file, "convergence", svg);
  return { file: out, kind: "convergence", slope };
}

export function plotComparison(file: string, outDir: string,
                               configHash: string | null = null): PlotResult {
  const rec = parseComparison(readFileSync(file, "utf8"), file);
  const byM = new Map<number, { x: number; y: number }[]>();
  for (const r of rec.rows) {
    if (!byM.has(r.M)) byM.set(r.M, []);
    byM.get(r.M)!.push({ x: r.time, y: r.relL2 });
  }
  const series = [...byM.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([M, pts]) => ({ label: `M = ${M}`, points: pts }));
  const svg = linePlot({
    title: `oracle comparison over time (${rec.kind})`,
    caption: captionFor(file, configHash),
    xLabel: "time",
    yLabel: "relative L2 error",
    series,
  });
  const out = writePlot(outDir, file, "comparison", svg);
  return { file: out, kind: "comparison" };
}

export function plotSnapshot(file: string, outDir: string,
                             configHash: string | null = null): PlotResult {
  const dump = parseField(readFileSync(file, "utf8"), file);
  if (dump.dim !== 2) {
    throw new FormatError(file, 1, `snapshot plots need a 2D field, got dim ${dump.dim}`);
  }
  const [nx, ny] = dump.sizes;
  const n = nx * ny;
  const mag = new Float64Array(n);
  for (let k = 0; k < n; k += 1) {
    let s = 0;
    for (const comp of dump.data) s += comp[k] * comp[k];
    mag[k] = Math.sqrt(s);
  }
  const svg = heatQuiver({
    title: `${dump.kind ?? "field"} at t = ${dump.time}`,
    caption: captionFor(file, configHash),
    nx,
    ny,
    magnitude: mag,
    u: dump.ncomp === 2 ? dump.data[0] : undefined,
    v: dump.ncomp === 2 ? dump.data[1] : undefined,
  });
  const out = writePlot(outDir, file, "snapshot", svg);
  return { file: out, kind: "snapshot" };
}

function writePlot(outDir: string, sourceFile: string, kind: PlotKind, svg: string): string {
  mkdirSync(outDir, { recursive: true });
  const base = path.basename(sourceFile).replace(/\.txt$/, "");
  const out = path.join(outDir, `${base}.${kind}.svg`);
  writeFileSync(out, svg);
  return out;
}

const PLOTTERS: Record<PlotKind, (f: string, o: string, h: string | null) => PlotResult> = {
  residual: plotResidual,
  convergence: plotConvergence,
  comparison: plotComparison,
  snapshot: plotSnapshot,
};

export function plotFile(file: string, kind: PlotKind, outDir: string,
                         configHash: string | null = null): PlotResult {
  return PLOTTERS[kind](file, outDir, configHash);
}

function detectKind(file: string): PlotKind | null {
  const head = readFileSync(file, "utf8").slice(0, 40);
  if (head.startsWith("residual-report v1")) return "residual";
  if (head.startsWith("comparison v1")) return "comparison";
  if (head.startsWith("torus-field v1")) return "snapshot";
  return null;
}

/** Regenerate every plot a run directory supports. */
export function plotRunDirectory(dir: string, outDir: string): PlotResult[] {
  const entries = readdirSync(dir).filter((f) => f.endsWith(".txt")).sort();
  let configHash: string | null = null;
  if (entries.includes("manifest.txt")) {
    const manifest = parseManifest(readFileSync(path.join(dir, "manifest.txt"), "utf8"),
                                   path.join(dir, "manifest.txt"));
    configHash = manifest["config_hash"] ?? null;
  }
  const results: PlotResult[] = [];
  for (const entry of entries) {
    const file = path.join(dir, entry);
    const kind = detectKind(file);
    if (kind === null) continue;
    results.push(plotFile(file, kind, outDir, configHash));
    if (kind === "comparison") {
      results.push(plotFile(file, "convergence", outDir, configHash));
    }
  }
  return results;
}

function parseArgs(argv: string[]) {
  const positional: string[] = [];
  let kind: string | null = null;
  let out: string | null = null;
  for (let i = 0; i < argv.length; i += 1) {
    if (argv[i] === "--kind") kind = argv[++i];
    else if (argv[i] === "--out") out = argv[++i];
    else positional.push(argv[i]);
  }
  return { positional, kind, out };
}

export function main(argv: string[]): number {
  const { positional, kind, out } = parseArgs(argv);
  if (positional.length !== 1) {
    console.error("usage: plot_report <run-dir | report-file> [--kind KIND] [--out DIR]");
    return 1;
  }
  const target = positional[0];
  try {
    if (statSync(target).isDirectory()) {
      const results = plotRunDirectory(target, out ?? path.join(target, "figures"));
      for (const r of results) {
        console.log(`${r.kind}: ${r.file}${r.slope !== undefined ? `  (slope ${r.slope.toFixed(3)})` : ""}`);
      }
      return 0;
    }
    const k = (kind as PlotKind | null) ?? detectKind(target);
    if (!k || !(k in PLOTTERS)) {
      console.error(`cannot determine plot kind for ${target}; pass --kind`);
      return 1;
    }
    const r = plotFile(target, k, out ?? path.dirname(target));
    console.log(`${r.kind}: ${r.file}${r.slope !== undefined ? `  (slope ${r.slope.toFixed(3)})` : ""}`);
    return 0;
  } catch (e) {
    if (e instanceof FormatError) {
      console.error(String(e.message));
      return 1;
    }
    throw e;
  }
}

const isDirectRun = process.argv[1] !== undefined
  && path.resolve(process.argv[1]).replace(/\.(ts|js)$/, "").endsWith("plot_report");
if (isDirectRun) {
  process.exit(main(process.argv.slice(2)));
}
