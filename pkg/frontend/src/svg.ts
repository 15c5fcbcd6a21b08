/**
 * Minimal deterministic SVG line charts: fixed-precision coordinates, no
 * timestamps, no randomness, so identical inputs yield identical bytes.
 */

import type { TracePoint } from "./csv.js";
import type { LayerRole } from "./panels.js";

export interface Series {
  role: LayerRole;
  points: TracePoint[];
}

// Roles follow the reference figure styling: particle front in green,
// trajectory limit dotted orange, continuum front solid blue.
const STYLE: Record<LayerRole, { stroke: string; width: number; dash?: string }> = {
  particle: { stroke: "#2ca02c", width: 1.2 },
  ode: { stroke: "#ff7f0e", width: 1.6, dash: "5,4" },
  pde: { stroke: "#1f77b4", width: 1.6 },
};

const f = (x: number): string => x.toFixed(2);

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => span / s <= n) ?? mag * 10;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = start; t <= hi + 1e-12 * span; t += step) ticks.push(t);
  return ticks;
}

const fmtTick = (x: number): string => {
  const s = x.toPrecision(6);
  return String(Number(s));
};

export interface PanelGeometry {
  width: number;
  height: number;
}

export function renderPanelSvg(
  title: string,
  series: Series[],
  xLabel: string,
  yLabel: string,
  geom: PanelGeometry = { width: 460, height: 330 },
  standalone = true,
): string {
  const { width, height } = geom;
  const m = { left: 58, right: 14, top: 30, bottom: 44 };
  const innerW = width - m.left - m.right;
  const innerH = height - m.top - m.bottom;
  let xLo = Infinity, xHi = -Infinity, yLo = Infinity, yHi = -Infinity;
  for (const s of series) {
    for (const p of s.points) {
      if (p.time < xLo) xLo = p.time;
      if (p.time > xHi) xHi = p.time;
      if (p.position < yLo) yLo = p.position;
      if (p.position > yHi) yHi = p.position;
    }
  }
  if (!(xHi > xLo)) xHi = xLo + 1;
  if (!(yHi > yLo)) yHi = yLo + 1;
  const yPad = 0.05 * (yHi - yLo);
  yLo -= yPad;
  yHi += yPad;
  const sx = (t: number) => m.left + ((t - xLo) / (xHi - xLo)) * innerW;
  const sy = (y: number) => m.top + innerH - ((y - yLo) / (yHi - yLo)) * innerH;

  const parts: string[] = [];
  if (standalone) {
    parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica,Arial,sans-serif">`,
    );
  } else {
    parts.push(`<g font-family="Helvetica,Arial,sans-serif">`);
  }
  parts.push(`<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`);
  parts.push(
    `<rect x="${m.left}" y="${m.top}" width="${innerW}" height="${innerH}" ` +
      `fill="none" stroke="#444444" stroke-width="1"/>`,
  );
  for (const t of niceTicks(xLo, xHi)) {
    const x = sx(t);
    parts.push(`<line x1="${f(x)}" y1="${f(m.top + innerH)}" x2="${f(x)}" y2="${f(m.top + innerH + 4)}" stroke="#444444"/>`);
    parts.push(
      `<text x="${f(x)}" y="${f(m.top + innerH + 16)}" font-size="10" text-anchor="middle">${fmtTick(t)}</text>`,
    );
  }
  for (const t of niceTicks(yLo, yHi)) {
    const y = sy(t);
    parts.push(`<line x1="${f(m.left - 4)}" y1="${f(y)}" x2="${f(m.left)}" y2="${f(y)}" stroke="#444444"/>`);
    parts.push(
      `<text x="${f(m.left - 7)}" y="${f(y + 3)}" font-size="10" text-anchor="end">${fmtTick(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${f(m.left + innerW / 2)}" y="${f(height - 8)}" font-size="11" text-anchor="middle">${escapeXml(xLabel)}</text>`,
  );
  parts.push(
    `<text x="14" y="${f(m.top + innerH / 2)}" font-size="11" text-anchor="middle" ` +
      `transform="rotate(-90 14 ${f(m.top + innerH / 2)})">${escapeXml(yLabel)}</text>`,
  );
  parts.push(
    `<text x="${f(m.left + innerW / 2)}" y="18" font-size="12" text-anchor="middle" font-weight="bold">${escapeXml(title)}</text>`,
  );
  for (const s of series) {
    const st = STYLE[s.role];
    const pts = s.points.map((p) => `${f(sx(p.time))},${f(sy(p.position))}`).join(" ");
    const dash = st.dash ? ` stroke-dasharray="${st.dash}"` : "";
    parts.push(
      `<polyline fill="none" stroke="${st.stroke}" stroke-width="${st.width}"${dash} points="${pts}"/>`,
    );
  }
  // legend lists only the roles actually present
  const present = series.map((s) => s.role);
  const missing = (Object.keys(STYLE) as LayerRole[]).filter((r) => !present.includes(r));
  let ly = m.top + 12;
  for (const role of present) {
    const st = STYLE[role];
    const dash = st.dash ? ` stroke-dasharray="${st.dash}"` : "";
    parts.push(
      `<line x1="${f(m.left + 8)}" y1="${f(ly - 3)}" x2="${f(m.left + 30)}" y2="${f(ly - 3)}" ` +
        `stroke="${st.stroke}" stroke-width="${st.width}"${dash}/>`,
    );
    parts.push(`<text x="${f(m.left + 35)}" y="${f(ly)}" font-size="10">${role}</text>`);
    ly += 13;
  }
  if (missing.length > 0) {
    parts.push(
      `<text x="${f(m.left + 8)}" y="${f(ly)}" font-size="9" fill="#888888">absent: ${missing.join(", ")}</text>`,
    );
  }
  parts.push(standalone ? "</svg>" : "</g>");
  return parts.join("\n") + "\n";
}

export function composeGrid(
  panelSvgs: string[],
  rows: number,
  cols: number,
  geom: PanelGeometry = { width: 460, height: 330 },
): string {
  const W = cols * geom.width;
  const H = rows * geom.height;
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`,
  ];
  panelSvgs.forEach((svg, i) => {
    const r = Math.floor(i / cols);
    const c = i % cols;
    parts.push(`<g transform="translate(${c * geom.width},${r * geom.height})">`);
    parts.push(svg.trimEnd());
    parts.push("</g>");
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
