import { describe, expect, it } from "vitest";

import { chartHitTest, chartPoints, DEFAULT_LAYOUT } from "../src/chart.js";
import type { HistoryEntry } from "../src/api.js";

const history: HistoryEntry[] = [
  { index: 0, re: 0.1, ss: 0.2, label: "step k=20" },
  { index: 1, re: 0.3, ss: 0.3, label: "prune x1" },
  { index: 2, re: 0.5, ss: 0.4, label: "prune x1" },
];

describe("history chart", () => {
  it("maps history to monotone x positions", () => {
    const pts = chartPoints(history, 2);
    expect(pts).toHaveLength(3);
    expect(pts[0].x).toBeLessThan(pts[1].x);
    expect(pts[1].x).toBeLessThan(pts[2].x);
  });

  it("higher error plots lower y (towards the top = lower RE)", () => {
    const pts = chartPoints(history, 0);
    expect(pts[0].y).toBeGreaterThan(pts[2].y - DEFAULT_LAYOUT.height);
    expect(pts[2].y).toBeLessThan(pts[0].y);
  });

  it("marks the cursor point", () => {
    const pts = chartPoints(history, 1);
    expect(pts.filter((p) => p.current).map((p) => p.index)).toEqual([1]);
  });

  it("chart data mirrors the server history verbatim", () => {
    const pts = chartPoints(history, 0);
    expect(pts.map((p) => [p.re, p.ss])).toEqual(history.map((h) => [h.re, h.ss]));
  });

  it("click hits the nearest point within the radius", () => {
    const pts = chartPoints(history, 0);
    expect(chartHitTest(pts, pts[1].x + 2, pts[1].y - 2)).toBe(1);
    expect(chartHitTest(pts, pts[1].x + 30, pts[1].y + 30, 8)).toBeNull();
  });

  it("single-entry history still renders", () => {
    const pts = chartPoints(history.slice(0, 1), 0);
    expect(pts).toHaveLength(1);
    expect(pts[0].current).toBe(true);
  });
});
