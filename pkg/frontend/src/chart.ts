/** History chart geometry: RE/SS trail with clickable points. Pure math so
 *  click-to-restore is testable without a canvas. */
import type { HistoryEntry } from "./api.js";

export interface ChartLayout {
  width: number;
  height: number;
  padding: number;
}

export interface ChartPoint {
  index: number;
  x: number;
  y: number;
  re: number;
  ss: number;
  label: string;
  current: boolean;
}

export const DEFAULT_LAYOUT: ChartLayout = { width: 360, height: 120, padding: 12 };

export function chartPoints(
  history: HistoryEntry[],
  cursor: number,
  layout: ChartLayout = DEFAULT_LAYOUT,
): ChartPoint[] {
  if (history.length === 0) return [];
  const res = history.map((h) => h.re);
  const lo = Math.min(...res);
  const hi = Math.max(...res);
  const span = hi - lo || 1;
  const innerW = layout.width - 2 * layout.padding;
  const innerH = layout.height - 2 * layout.padding;
  const dx = history.length > 1 ? innerW / (history.length - 1) : 0;
  return history.map((h, i) => ({
    index: h.index,
    x: layout.padding + i * dx,
    y: layout.padding + innerH * (1 - (h.re - lo) / span),
    re: h.re,
    ss: h.ss,
    label: h.label,
    current: h.index === cursor,
  }));
}

/** History index under a chart click, or null outside the hit radius. */
export function chartHitTest(
  points: ChartPoint[],
  x: number,
  y: number,
  radius = 8,
): number | null {
  let best: number | null = null;
  let bestD = radius;
  for (const p of points) {
    const d = Math.hypot(p.x - x, p.y - y);
    if (d <= bestD) {
      bestD = d;
      best = p.index;
    }
  }
  return best;
}
