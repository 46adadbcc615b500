/**
 * Minimal deterministic SVG chart builders: fixed style, labeled axes,
 * caption line for the config hash. No external plotting dependencies.
 */

const FONT = "font-family=\"Helvetica, Arial, sans-serif\"";
const COLORS = ["#1f6fb2", "#c23b22", "#2e8b57", "#8a5fb0", "#b8860b", "#444444"];

export interface SeriesPoint {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: SeriesPoint[];
  marker?: boolean;
}

export interface LinePlotSpec {
  title: string;
  caption: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  xLog?: boolean;
  yLog?: boolean;
  annotations?: string[];
  width?: number;
  height?: number;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(3)));
}

interface ScaleSpec {
  lo: number;
  hi: number;
  log: boolean;
}

function makeScale(spec: ScaleSpec, rlo: number, rhi: number) {
  const t = (v: number) => (spec.log ? Math.log10(v) : v);
  const a = t(spec.lo);
  const b = t(spec.hi);
  const span = b - a || 1;
  return (v: number) => rlo + ((t(v) - a) / span) * (rhi - rlo);
}

function ticks(spec: ScaleSpec, n = 5): number[] {
  if (spec.log) {
    const lo = Math.ceil(Math.log10(spec.lo) - 1e-9);
    const hi = Math.floor(Math.log10(spec.hi) + 1e-9);
    const out: number[] = [];
    for (let d = lo; d <= hi; d += 1) out.push(10 ** d);
    if (out.length >= 2) return out;
    return [spec.lo, spec.hi];
  }
  const step = (spec.hi - spec.lo) / (n - 1) || 1;
  return Array.from({ length: n }, (_, i) => spec.lo + i * step);
}

function dataRange(values: number[], log: boolean): ScaleSpec {
  const pos = log ? values.filter((v) => v > 0) : values;
  let lo = Math.min(...pos);
  let hi = Math.max(...pos);
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) {
    lo = log ? 1e-3 : 0;
    hi = 1;
  }
  if (lo === hi) {
    lo = log ? lo / 10 : lo - 1;
    hi = log ? hi * 10 : hi + 1;
  }
  return { lo, hi, log };
}

export function linePlot(spec: LinePlotSpec): string {
  const W = spec.width ?? 640;
  const H = spec.height ?? 420;
  const m = { left: 70, right: 20, top: 40, bottom: 55 };
  const xs = spec.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = spec.series.flatMap((s) => s.points.map((p) => p.y));
  const hasData = xs.length > 0;
  const parts: string[] = [];
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(`<text x="${W / 2}" y="22" text-anchor="middle" ${FONT} font-size="15" font-weight="bold">${esc(spec.title)}</text>`);
  parts.push(`<text x="${W / 2}" y="${H - 8}" text-anchor="middle" ${FONT} font-size="10" fill="#666">${esc(spec.caption)}</text>`);

  if (!hasData) {
    parts.push(`<text x="${W / 2}" y="${H / 2}" text-anchor="middle" ${FONT} font-size="14" fill="#999">no data</text>`);
    return svgDoc(parts, W, H);
  }

  const xr = dataRange(xs, Boolean(spec.xLog));
  const yr = dataRange(ys, Boolean(spec.yLog));
  const sx = makeScale(xr, m.left, W - m.right);
  const sy = makeScale(yr, H - m.bottom, m.top);

  for (const tx of ticks(xr)) {
    const px = sx(tx);
    parts.push(`<line x1="${px}" y1="${m.top}" x2="${px}" y2="${H - m.bottom}" stroke="#eee"/>`);
    parts.push(`<text x="${px}" y="${H - m.bottom + 16}" text-anchor="middle" ${FONT} font-size="10">${fmt(tx)}</text>`);
  }
  for (const ty of ticks(yr)) {
    const py = sy(ty);
    parts.push(`<line x1="${m.left}" y1="${py}" x2="${W - m.right}" y2="${py}" stroke="#eee"/>`);
    parts.push(`<text x="${m.left - 6}" y="${py + 3}" text-anchor="end" ${FONT} font-size="10">${fmt(ty)}</text>`);
  }
  parts.push(`<rect x="${m.left}" y="${m.top}" width="${W - m.left - m.right}" height="${H - m.top - m.bottom}" fill="none" stroke="#333"/>`);
  parts.push(`<text x="${(m.left + W - m.right) / 2}" y="${H - m.bottom + 34}" text-anchor="middle" ${FONT} font-size="12">${esc(spec.xLabel)}</text>`);
  parts.push(`<text x="18" y="${(m.top + H - m.bottom) / 2}" text-anchor="middle" ${FONT} font-size="12" transform="rotate(-90 18 ${(m.top + H - m.bottom) / 2})">${esc(spec.yLabel)}</text>`);

  spec.series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    const pts = s.points
      .filter((p) => (!xr.log || p.x > 0) && (!yr.log || p.y > 0))
      .map((p) => `${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`);
    if (pts.length > 1) {
      parts.push(`<polyline points="${pts.join(" ")}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    }
    if (s.marker ?? true) {
      for (const p of pts) {
        const [px, py] = p.split(",");
        parts.push(`<circle cx="${px}" cy="${py}" r="3" fill="${color}"/>`);
      }
    }
    parts.push(`<text x="${W - m.right - 8}" y="${m.top + 16 + 14 * i}" text-anchor="end" ${FONT} font-size="11" fill="${color}">${esc(s.label)}</text>`);
  });

  (spec.annotations ?? []).forEach((a, i) => {
    parts.push(`<text x="${m.left + 10}" y="${m.top + 16 + 14 * i}" ${FONT} font-size="12" fill="#222">${esc(a)}</text>`);
  });
  return svgDoc(parts, W, H);
}

export interface HeatQuiverSpec {
  title: string;
  caption: string;
  nx: number;
  ny: number;
  /** magnitude per cell, row-major with x the leading axis */
  magnitude: Float64Array;
  /** optional vector components for the quiver overlay */
  u?: Float64Array;
  v?: Float64Array;
  arrowStride?: number;
  width?: number;
}

function rampColor(t: number): string {
  // white -> deep blue ramp
  const r = Math.round(255 - 215 * t);
  const g = Math.round(255 - 180 * t);
  const b = Math.round(255 - 70 * t);
  return `rgb(${r},${g},${b})`;
}

export function heatQuiver(spec: HeatQuiverSpec): string {
  const W = spec.width ?? 560;
  const m = { left: 55, right: 20, top: 40, bottom: 45 };
  const side = W - m.left - m.right;
  const H = side + m.top + m.bottom;
  const { nx, ny } = spec;
  const cw = side / nx;
  const ch = side / ny;
  let vmax = 0;
  for (const v of spec.magnitude) vmax = Math.max(vmax, Math.abs(v));
  const parts: string[] = [];
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(`<text x="${W / 2}" y="22" text-anchor="middle" ${FONT} font-size="15" font-weight="bold">${esc(spec.title)}</text>`);
  for (let i = 0; i < nx; i += 1) {
    for (let j = 0; j < ny; j += 1) {
      const t = vmax > 0 ? Math.abs(spec.magnitude[i * ny + j]) / vmax : 0;
      const x = m.left + i * cw;
      const y = m.top + side - (j + 1) * ch;
      parts.push(`<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${(cw + 0.5).toFixed(2)}" height="${(ch + 0.5).toFixed(2)}" fill="${rampColor(t)}"/>`);
    }
  }
  if (spec.u && spec.v) {
    const stride = spec.arrowStride ?? Math.max(1, Math.floor(nx / 16));
    let amax = 0;
    for (let k = 0; k < spec.u.length; k += 1) {
      amax = Math.max(amax, Math.hypot(spec.u[k], spec.v[k]));
    }
    const scale = amax > 0 ? (stride * cw * 0.8) / amax : 0;
    for (let i = 0; i < nx; i += stride) {
      for (let j = 0; j < ny; j += stride) {
        const k = i * ny + j;
        const cx = m.left + (i + 0.5) * cw;
        const cy = m.top + side - (j + 0.5) * ch;
        const dx = spec.u[k] * scale;
        const dy = -spec.v[k] * scale;
        parts.push(`<line x1="${(cx - dx / 2).toFixed(2)}" y1="${(cy - dy / 2).toFixed(2)}" x2="${(cx + dx / 2).toFixed(2)}" y2="${(cy + dy / 2).toFixed(2)}" stroke="#222" stroke-width="1"/>`);
        parts.push(`<circle cx="${(cx + dx / 2).toFixed(2)}" cy="${(cy + dy / 2).toFixed(2)}" r="1.4" fill="#222"/>`);
      }
    }
  }
  parts.push(`<rect x="${m.left}" y="${m.top}" width="${side}" height="${side}" fill="none" stroke="#333"/>`);
  parts.push(`<text x="${m.left + side / 2}" y="${m.top + side + 18}" text-anchor="middle" ${FONT} font-size="12">x</text>`);
  parts.push(`<text x="${m.left - 14}" y="${m.top + side / 2}" text-anchor="middle" ${FONT} font-size="12">y</text>`);
  parts.push(`<text x="${W / 2}" y="${H - 8}" text-anchor="middle" ${FONT} font-size="10" fill="#666">${esc(spec.caption)}</text>`);
  return svgDoc(parts, W, H);
}

function svgDoc(parts: string[], w: number, h: number): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${w}" height="${h}" viewBox="0 0 ${w} ${h}">\n${parts.join("\n")}\n</svg>\n`;
}
