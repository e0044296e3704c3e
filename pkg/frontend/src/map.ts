/** Planar map of the alternatives: marker area tracks lottery mass and the
 * pending pair is highlighted. Pure string rendering, same as the chart. */

import type { AlternativeCard } from "./api.js";

export interface MapState {
  alternatives: AlternativeCard[];
  lottery: number[];
  pendingPair?: [number, number];
  /** Optional reference point (for instance a scripted voter's ideal). */
  point?: { x: number; y: number };
}

function bounds(state: MapState) {
  const xs = state.alternatives.map((a) => a.x);
  const ys = state.alternatives.map((a) => a.y);
  if (state.point) {
    xs.push(state.point.x);
    ys.push(state.point.y);
  }
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  // Degenerate extents (single point, collinear layouts) get unit padding.
  return {
    xMin,
    yMin,
    xSpan: xMax - xMin || 1,
    ySpan: yMax - yMin || 1,
  };
}

export function renderMap(state: MapState, size = 240): string {
  if (state.alternatives.length === 0) throw new Error("no alternatives");
  if (state.lottery.length !== state.alternatives.length) {
    throw new Error("lottery length mismatch");
  }
  const pad = 24;
  const span = size - 2 * pad;
  const b = bounds(state);
  const sx = (x: number) => pad + ((x - b.xMin) / b.xSpan) * span;
  const sy = (y: number) => size - pad - ((y - b.yMin) / b.ySpan) * span;
  const pending = new Set(state.pendingPair ?? []);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${size} ${size}" ` +
      `class="alternative-map" role="img">`,
    `<rect x="0" y="0" width="${size}" height="${size}" fill="#fdfdfd"/>`,
  ];
  state.alternatives.forEach((alt, i) => {
    const r = 4 + 14 * Math.sqrt(Math.min(Math.max(state.lottery[i], 0), 1));
    const stroke = pending.has(alt.id) ? "#d62728" : "#333333";
    const strokeWidth = pending.has(alt.id) ? 3 : 1;
    parts.push(
      `<circle cx="${sx(alt.x).toFixed(1)}" cy="${sy(alt.y).toFixed(1)}" ` +
        `r="${r.toFixed(1)}" fill="#1f77b4" fill-opacity="0.55" ` +
        `stroke="${stroke}" stroke-width="${strokeWidth}" ` +
        `data-alternative="${alt.id}"/>`,
      `<text x="${sx(alt.x).toFixed(1)}" y="${(sy(alt.y) - r - 4).toFixed(1)}" ` +
        `font-size="10" text-anchor="middle">${alt.label}</text>`,
    );
  });
  if (state.point) {
    const px = sx(state.point.x).toFixed(1);
    const py = sy(state.point.y).toFixed(1);
    parts.push(
      `<path d="M ${px} ${py} m -5 0 l 10 0 m -5 -5 l 0 10" ` +
        `stroke="#2ca02c" stroke-width="2" data-role="reference-point"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
