/**
 * Scatter CSV parsing and a dependency-free SVG plot.
 *
 * The server emits:
 *   # units: inertia_mws [MWs], wind_mw [MW]
 *   ts,x,y,insecure
 *   1760000000,23000,0,0
 */

import { esc } from "./format.js";

export interface ScatterPoint {
  ts: number;
  x: number;
  y: number;
  insecure: boolean;
}

export interface ScatterData {
  xLabel: string;
  yLabel: string;
  points: ScatterPoint[];
}

export function parseScatterCsv(text: string): ScatterData {
  const lines = text.split(/\r?\n/).filter((l) => l.trim() !== "");
  let xLabel = "x";
  let yLabel = "y";
  let i = 0;
  const units = lines[0]?.match(
    /^#\s*units:\s*(\S+)\s*\[([^\]]*)\]\s*,\s*(\S+)\s*\[([^\]]*)\]/,
  );
  if (units) {
    xLabel = `${units[1]} [${units[2]}]`;
    yLabel = `${units[3]} [${units[4]}]`;
    i = 1;
  }
  if (lines[i] !== "ts,x,y,insecure") {
    throw new Error(`unexpected scatter header: ${lines[i]}`);
  }
  const points: ScatterPoint[] = [];
  for (const line of lines.slice(i + 1)) {
    const [ts, x, y, insecure] = line.split(",");
    points.push({
      ts: Number(ts),
      x: Number(x),
      y: Number(y),
      insecure: insecure === "1",
    });
  }
  return { xLabel, yLabel, points };
}

function scale(lo: number, hi: number, outLo: number, outHi: number) {
  const span = hi - lo || 1; // degenerate axis: park everything mid-range
  return (v: number) => outLo + ((v - lo) / span) * (outHi - outLo);
}

export function renderScatterSvg(
  data: ScatterData,
  width = 520,
  height = 300,
): string {
  const m = { left: 56, right: 14, top: 12, bottom: 36 };
  const xs = data.points.map((p) => p.x);
  const ys = data.points.map((p) => p.y);
  const xMin = xs.length ? Math.min(...xs) : 0;
  const xMax = xs.length ? Math.max(...xs) : 1;
  const yMin = ys.length ? Math.min(...ys) : 0;
  const yMax = ys.length ? Math.max(...ys) : 1;
  const sx = scale(xMin, xMax, m.left, width - m.right);
  const sy = scale(yMin, yMax, height - m.bottom, m.top);

  const dots = data.points
    .map((p) => {
      const cls = p.insecure ? "pt insecure" : "pt secure";
      return `<circle class="${cls}" cx="${sx(p.x).toFixed(1)}" cy="${sy(p.y).toFixed(1)}" r="4"><title>${p.ts}</title></circle>`;
    })
    .join("");

  const axisY = height - m.bottom;
  return `<svg class="scatter" viewBox="0 0 ${width} ${height}" role="img">
<line class="axis" x1="${m.left}" y1="${axisY}" x2="${width - m.right}" y2="${axisY}"/>
<line class="axis" x1="${m.left}" y1="${m.top}" x2="${m.left}" y2="${axisY}"/>
<text class="tick" x="${m.left}" y="${axisY + 14}">${xMin}</text>
<text class="tick" x="${width - m.right}" y="${axisY + 14}" text-anchor="end">${xMax}</text>
<text class="tick" x="${m.left - 6}" y="${axisY}" text-anchor="end">${yMin}</text>
<text class="tick" x="${m.left - 6}" y="${m.top + 8}" text-anchor="end">${yMax}</text>
<text class="label" x="${(m.left + width - m.right) / 2}" y="${height - 6}" text-anchor="middle">${esc(data.xLabel)}</text>
<text class="label" x="12" y="${(m.top + axisY) / 2}" transform="rotate(-90 12 ${(m.top + axisY) / 2})" text-anchor="middle">${esc(data.yLabel)}</text>
${dots}
</svg>`;
}
