import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import * as path from "path";

import { describe, expect, it } from "vitest";

import { main, plotFile, plotRunDirectory } from "../src/plot_report.js";

const FIXTURE = path.join(__dirname, "fixtures", "meanfield-ns-run");

function tmp(): string {
  return mkdtempSync(path.join(tmpdir(), "meanflow-figs-"));
}

describe("run-directory regeneration", () => {
  it("regenerates every plot from a completed meanfield-ns run", () => {
    const out = tmp();
    const results = plotRunDirectory(FIXTURE, out);
    const kinds = results.map((r) => r.kind);
    expect(kinds).toContain("residual");
    expect(kinds).toContain("comparison");
    expect(kinds).toContain("convergence");
    expect(kinds).toContain("snapshot");
    for (const r of results) {
      expect(existsSync(r.file)).toBe(true);
      expect(readFileSync(r.file, "utf8")).toContain("<svg");
    }
    // every field dump in the run directory got a snapshot figure
    expect(kinds.filter((k) => k === "snapshot").length).toBeGreaterThanOrEqual(11);
  });

  it("annotates the fitted Monte Carlo slope within [-0.7, -0.3]", () => {
    const out = tmp();
    const results = plotRunDirectory(FIXTURE, out);
    const conv = results.find((r) => r.kind === "convergence");
    expect(conv).toBeDefined();
    expect(conv!.slope).toBeDefined();
    expect(conv!.slope!).toBeGreaterThanOrEqual(-0.7);
    expect(conv!.slope!).toBeLessThanOrEqual(-0.3);
    const svg = readFileSync(conv!.file, "utf8");
    expect(svg).toContain(`fitted slope = ${conv!.slope!.toFixed(3)}`);
  });

  it("stamps the config hash into every caption", () => {
    const out = tmp();
    const manifest = readFileSync(path.join(FIXTURE, "manifest.txt"), "utf8");
    const hash = manifest.match(/config_hash = (\S+)/)![1];
    for (const r of plotRunDirectory(FIXTURE, out)) {
      expect(readFileSync(r.file, "utf8")).toContain(hash);
    }
  });

  it("is deterministic byte for byte", () => {
    const a = tmp();
    const b = tmp();
    const ra = plotRunDirectory(FIXTURE, a);
    const rb = plotRunDirectory(FIXTURE, b);
    for (let i = 0; i < ra.length; i += 1) {
      expect(readFileSync(ra[i].file, "utf8")).toBe(readFileSync(rb[i].file, "utf8"));
    }
  });
});

describe("single-file plotting and edge cases", () => {
  it("renders a 'no data' placeholder for an empty residual report (exit 0)", () => {
    const dir = tmp();
    const report = path.join(dir, "empty_residual.txt");
    writeFileSync(report, [
      "residual-report v1", "equation = burgers", "orientation = reversed",
      "dim = 1", "grid = 64", "dt = 0.001", "M = 0", "sigma = 0", "nu = 0",
      "columns = time,l2,linf", "",
    ].join("\n"));
    const code = main([report, "--kind", "residual", "--out", dir]);
    expect(code).toBe(0);
    const svg = readFileSync(path.join(dir, "empty_residual.residual.svg"), "utf8");
    expect(svg).toContain("no data");
  });

  it("reports malformed input with file, line and field (exit 1)", () => {
    const dir = tmp();
    const bad = path.join(dir, "bad.txt");
    writeFileSync(bad, "comparison v1\ncolumns = M,time,rel_l2\n64,notanumber,0.1\n");
    expect(() => plotFile(bad, "comparison", dir)).toThrowError(/line 3: field 'time'/);
    expect(main([bad, "--kind", "comparison", "--out", dir])).toBe(1);
  });

  it("infers the kind from the file header", () => {
    const dir = tmp();
    const code = main([path.join(FIXTURE, "ns_residual.txt"), "--out", dir]);
    expect(code).toBe(0);
    expect(existsSync(path.join(dir, "ns_residual.residual.svg"))).toBe(true);
  });

  it("rejects 1D dumps for snapshot plots", () => {
    const dir = tmp();
    const f = path.join(dir, "f1d.txt");
    writeFileSync(f, "torus-field v1; 1; 8; 1; 0\n1\n2\n3\n4\n5\n6\n7\n8\n");
    expect(() => plotFile(f, "snapshot", dir)).toThrowError(/2D field/);
  });
});
