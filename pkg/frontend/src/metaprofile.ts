// Meta-profile chart model: isometric-projected 3D bars (blue HMD, red VMD)
// with click-to-select and a conjunctive drill-down over the selection.
// Geometry is the only thing computed client-side; scores come verbatim
// from the backend and bar order follows the response.

import type { Bar } from "./api.js";
import type { BarKey } from "./state.js";

export const HMD_COLOR = "#2e6fdb"; // blue bars: horizontal metadata
export const VMD_COLOR = "#d44a3a"; // red bars: vertical metadata

export type BarGeometry = {
  key: BarKey;
  score: number;
  color: string;
  // screen-space polygons (isometric projection of a cuboid)
  top: [number, number][];
  left: [number, number][];
  right: [number, number][];
  hitBox: { x: number; y: number; w: number; h: number };
  labelAnchor: [number, number];
  selected: boolean;
};

export type ChartLayout = {
  width: number;
  height: number;
  bars: BarGeometry[];
};

const ISO_DX = 0.5; // screen x per depth unit
const ISO_DY = 0.25; // screen y per depth unit

export function barKey(bar: Bar): BarKey {
  return { label: bar.label, axis: bar.axis };
}

export function sameBar(a: BarKey, b: BarKey): boolean {
  return a.label === b.label && a.axis === b.axis;
}

export function toggleBar(selection: BarKey[], key: BarKey): BarKey[] {
  const without = selection.filter((b) => !sameBar(b, key));
  if (without.length !== selection.length) return without;
  return [...selection, key];
}

export function isSelected(selection: BarKey[], key: BarKey): boolean {
  return selection.some((b) => sameBar(b, key));
}

export function layoutChart(
  bars: Bar[],
  selection: BarKey[],
  width = 720,
  height = 300,
): ChartLayout {
  const n = bars.length;
  if (n === 0) return { width, height, bars: [] };
  const maxScore = Math.max(...bars.map((b) => b.score), 1e-9);
  const margin = 36;
  const plotWidth = width - 2 * margin;
  const slot = plotWidth / n;
  const barWidth = Math.min(46, slot * 0.55);
  const depth = barWidth * 0.6;
  const maxBarHeight = height - 2 * margin - depth * ISO_DY;
  const baseY = height - margin;

  const out: BarGeometry[] = [];
  bars.forEach((bar, i) => {
    const h = bar.score <= 0 ? 2 : Math.max(2, (bar.score / maxScore) * maxBarHeight);
    const x0 = margin + i * slot + (slot - barWidth) / 2;
    const x1 = x0 + barWidth;
    const yBottom = baseY;
    const yTop = baseY - h;
    const dx = depth * ISO_DX;
    const dy = depth * ISO_DY;
    const top: [number, number][] = [
      [x0, yTop],
      [x1, yTop],
      [x1 + dx, yTop - dy],
      [x0 + dx, yTop - dy],
    ];
    const left: [number, number][] = [
      [x0, yTop],
      [x1, yTop],
      [x1, yBottom],
      [x0, yBottom],
    ];
    const right: [number, number][] = [
      [x1, yTop],
      [x1 + dx, yTop - dy],
      [x1 + dx, yBottom - dy],
      [x1, yBottom],
    ];
    out.push({
      key: barKey(bar),
      score: bar.score,
      color: bar.axis === "HMD" ? HMD_COLOR : VMD_COLOR,
      top,
      left,
      right,
      hitBox: { x: x0, y: yTop - dy, w: barWidth + dx, h: h + dy },
      labelAnchor: [x0 + barWidth / 2, yBottom + 14],
      selected: isSelected(selection, barKey(bar)),
    });
  });
  return { width, height, bars: out };
}

export function hitTest(layout: ChartLayout, x: number, y: number): BarKey | null {
  // later bars draw over earlier ones; test back-to-front
  for (let i = layout.bars.length - 1; i >= 0; i--) {
    const { hitBox, key } = layout.bars[i];
    if (x >= hitBox.x && x <= hitBox.x + hitBox.w && y >= hitBox.y && y <= hitBox.y + hitBox.h) {
      return key;
    }
  }
  return null;
}

export function drilldownPayload(selection: BarKey[]): { label: string; axis: string }[] {
  return selection.map((b) => ({ label: b.label, axis: b.axis }));
}
