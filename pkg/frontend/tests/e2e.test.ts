/** End-to-end annotation flow against a real `skelforge serve` instance.
 *
 *  Creates a session on the Y fixture, prunes one arm (endpoint count drops
 *  3 -> 2, reconstruction error strictly increases in the chart), restores
 *  the pre-prune state via a history-chart click (canvas pixel-identical),
 *  exports, and validates the manifest (zod schema + a real import through
 *  the Python library).
 */
import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotationClient, GtManifestSchema } from "../src/api.js";
import { AnnotatorController } from "../src/controller.js";
import { chartPoints, DEFAULT_LAYOUT } from "../src/chart.js";
import { sceneDigest } from "../src/render.js";

const here = dirname(fileURLToPath(import.meta.url));
const PORT = 18732;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let workdir: string;

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/shapes`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("skelforge serve did not come up");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "skelforge-e2e-"));
  server = spawn(
    "python3",
    ["-m", "skelforge.cli", "serve",
      "--dataset-root", join(here, "fixtures"),
      "--export-root", join(workdir, "exports"),
      "--session-root", join(workdir, "sessions"),
      "--host", "127.0.0.1", "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForServer();
}, 40000);

afterAll(() => {
  server?.kill();
});

describe("end-to-end annotation flow", () => {
  it("prune, chart-restore, export", async () => {
    const client = new AnnotationClient(BASE);
    expect(await client.listShapes()).toContain("y");

    const controller = new AnnotatorController(client);
    await controller.start("y", "e2e", { kMin: 3, kMax: 20 });

    // the Y fixture opens with exactly three arms
    const s0 = controller.session;
    expect(s0.endpoints).toHaveLength(3);
    const leaves = s0.branches.filter((b) => b.leaf);
    expect(leaves.length).toBe(3);

    const frameBefore = sceneDigest(controller.renderFrame());

    // click mid-arm (real branch coordinates), then Prune
    const arm = leaves[0];
    const mid = arm.path[Math.floor(arm.path.length / 2)];
    controller.clickCanvas(mid[0], mid[1], false);
    expect([...controller.state.selected]).toEqual([arm.id]);
    expect(await controller.pruneSelected()).toBe(true);

    const s1 = controller.session;
    expect(s1.endpoints).toHaveLength(2);
    expect(s1.history).toHaveLength(2);
    expect(s1.history[1].re).toBeGreaterThan(s1.history[0].re);
    expect(sceneDigest(controller.renderFrame())).not.toBe(frameBefore);

    // restore the pre-prune state by clicking its chart point
    const pts = chartPoints(s1.history, s1.cursor, DEFAULT_LAYOUT);
    expect(await controller.clickChart(pts[0].x, pts[0].y)).toBe(true);
    expect(controller.session.cursor).toBe(0);
    expect(controller.session.endpoints).toHaveLength(3);
    expect(sceneDigest(controller.renderFrame())).toBe(frameBefore);

    // history is append-only: both states remain charted
    expect(controller.session.history).toHaveLength(2);

    // export and validate the manifest
    const manifestPath = await controller.exportGt();
    expect(manifestPath).toBeTruthy();
    const manifest = GtManifestSchema.parse(
      JSON.parse(readFileSync(manifestPath!, "utf-8")));
    expect(manifest.endpoints).toHaveLength(3);

    // the bundle re-imports cleanly through the library
    const check = execFileSync("python3", ["-c", `
import sys
from skelforge import import_gt, export_gt
import tempfile, pathlib
rec = import_gt(pathlib.Path(${JSON.stringify(manifestPath)}).parent)
with tempfile.TemporaryDirectory() as td:
    export_gt(rec, td)   # re-export revalidates every record invariant
print("IMPORT_OK", len(rec.endpoints))
`]).toString();
    expect(check).toContain("IMPORT_OK 3");
  }, 60000);

  it("ladder stepping round-trips pixels", async () => {
    const client = new AnnotationClient(BASE);
    const controller = new AnnotatorController(client);
    await controller.start("y", "e2e-steps", { kMin: 3, kMax: 20 });
    const before = sceneDigest(controller.renderFrame());
    expect(await controller.stepLadder(-1)).toBe(true);
    expect(controller.session.step).toBe(1);
    expect(await controller.stepLadder(1)).toBe(true);
    expect(controller.session.step).toBe(0);
    expect(sceneDigest(controller.renderFrame())).toBe(before);
  }, 30000);

  it("integration over two sessions reports hints and rationale", async () => {
    const client = new AnnotationClient(BASE);
    const a = new AnnotatorController(client);
    await a.start("y", "ann-a", { kMin: 3, kMax: 20 });
    const b = new AnnotatorController(client);
    await b.start("y", "ann-b", { kMin: 3, kMax: 20 });
    // b prunes one arm so the sessions differ
    const leaf = b.session.branches.find((br) => br.leaf)!;
    b.clickCanvas(leaf.path[1][0], leaf.path[1][1], false);
    await b.pruneSelected();

    const result = await client.integrate("y", [
      a.session.session_id, b.session.session_id,
    ]);
    expect(Object.keys(result.hints).sort()).toEqual(["ann-a", "ann-b"]);
    expect(["max_votes(1)", "branch_union", "median_error"])
      .toContain(result.rationale);
  }, 30000);
});
