import { afterEach, describe, expect, it, vi } from "vitest";

import { AnnotationClient } from "../src/api.js";
import { AnnotatorController } from "../src/controller.js";
import { ySession } from "./fixtures.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("controller revision handling", () => {
  it("sends the current revision and adopts the response", async () => {
    const calls: { url: string; body: unknown }[] = [];
    vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
      const body = init?.body ? JSON.parse(String(init.body)) : null;
      calls.push({ url, body });
      if (url.endsWith("/sessions")) return jsonResponse(ySession(), 201);
      if (url.endsWith("/prune")) {
        return jsonResponse(ySession({
          revision: 1,
          branches: ySession().branches.filter((b) => b.id !== "up"),
          endpoints: [[5, 11], [11, 11]],
          re: 0.2,
          history: [...ySession().history, { index: 1, re: 0.2, ss: 0.3, label: "prune x1" }],
        }));
      }
      throw new Error(`unexpected ${url}`);
    });
    const c = new AnnotatorController(new AnnotationClient("http://test"));
    await c.start("y", "t");
    c.clickCanvas(8, 5, false);
    expect([...c.state.selected]).toEqual(["up"]);
    const ok = await c.pruneSelected();
    expect(ok).toBe(true);
    expect(calls[1].body).toEqual({ branch_ids: ["up"], revision: 0 });
    expect(c.session.revision).toBe(1);
    expect(c.state.selected.size).toBe(0);
    expect(c.session.endpoints).toHaveLength(2);
  });

  it("409 refreshes the session and prompts a retry", async () => {
    let fetched = 0;
    vi.stubGlobal("fetch", async (url: string) => {
      if (url.endsWith("/sessions")) return jsonResponse(ySession(), 201);
      if (url.endsWith("/step")) return new Response("stale", { status: 409 });
      if (url.includes("/sessions/")) {
        fetched += 1;
        return jsonResponse(ySession({ revision: 5 }));
      }
      throw new Error(`unexpected ${url}`);
    });
    const c = new AnnotatorController(new AnnotationClient("http://test"));
    await c.start("y", "t");
    const ok = await c.stepLadder(-1);
    expect(ok).toBe(false);
    expect(fetched).toBe(1);
    expect(c.session.revision).toBe(5);
    expect(c.state.toast).toContain("Retry");
  });

  it("network failure raises the offline banner without mutating state", async () => {
    let first = true;
    vi.stubGlobal("fetch", async (url: string) => {
      if (first && url.endsWith("/sessions")) {
        first = false;
        return jsonResponse(ySession(), 201);
      }
      throw new TypeError("fetch failed");
    });
    const c = new AnnotatorController(new AnnotationClient("http://test"));
    await c.start("y", "t");
    const before = c.session;
    const ok = await c.stepLadder(-1);
    expect(ok).toBe(false);
    expect(c.state.offline).toBe(true);
    expect(c.session).toBe(before);
  });

  it("422 shows the server message as a toast", async () => {
    vi.stubGlobal("fetch", async (url: string) => {
      if (url.endsWith("/sessions")) return jsonResponse(ySession(), 201);
      return new Response("step 17 out of ladder bounds", { status: 422 });
    });
    const c = new AnnotatorController(new AnnotationClient("http://test"));
    await c.start("y", "t");
    const ok = await c.stepLadder(-1);
    expect(ok).toBe(false);
    expect(c.state.toast).toContain("out of ladder bounds");
  });

  it("prune with empty selection is a no-op", async () => {
    vi.stubGlobal("fetch", async (url: string) => {
      if (url.endsWith("/sessions")) return jsonResponse(ySession(), 201);
      throw new Error("should not be called");
    });
    const c = new AnnotatorController(new AnnotationClient("http://test"));
    await c.start("y", "t");
    expect(await c.pruneSelected()).toBe(false);
  });
});
