/** DOM wiring: canvas, toolbar, display settings, history chart, integration
 *  tab. Everything stateful lives in the controller; this file only
 *  translates DOM events to controller calls and paints frames. */
import { AnnotationClient } from "./api.js";
import { AnnotatorController } from "./controller.js";
import { chartPoints, DEFAULT_LAYOUT } from "./chart.js";
import { shapeLayerFromMask } from "./render.js";

const SCALE = 4;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function loadShapeLayer(client: AnnotationClient, shapeId: string) {
  const img = new Image();
  img.crossOrigin = "anonymous";
  img.src = client.shapeUrl(shapeId);
  await img.decode();
  const off = document.createElement("canvas");
  off.width = img.naturalWidth;
  off.height = img.naturalHeight;
  const ctx = off.getContext("2d")!;
  ctx.drawImage(img, 0, 0);
  const data = ctx.getImageData(0, 0, off.width, off.height).data;
  const mask = new Uint8Array(off.width * off.height);
  for (let i = 0; i < mask.length; i++) {
    mask[i] = data[i * 4] > 0 ? 1 : 0;
  }
  return shapeLayerFromMask(off.width, off.height, mask);
}

export async function main(): Promise<void> {
  const base = (window as { SKELFORGE_API?: string }).SKELFORGE_API
    ?? `${location.protocol}//${location.host}`;
  const client = new AnnotationClient(base);
  const controller = new AnnotatorController(client);

  const canvas = el<HTMLCanvasElement>("scene");
  const chart = el<HTMLCanvasElement>("history-chart");
  const status = el<HTMLDivElement>("status");
  const banner = el<HTMLDivElement>("offline-banner");
  const shapeSelect = el<HTMLSelectElement>("shape-select");
  const metricRe = el<HTMLSpanElement>("metric-re");
  const metricSs = el<HTMLSpanElement>("metric-ss");
  const stepLabel = el<HTMLSpanElement>("step-label");
  const integTable = el<HTMLTableElement>("integration-table");

  for (const id of await client.listShapes()) {
    const opt = document.createElement("option");
    opt.value = id;
    opt.textContent = id;
    shapeSelect.appendChild(opt);
  }

  const sessionsByShape = new Map<string, string[]>();

  function paint(): void {
    const st = controller.state;
    banner.style.display = st.offline ? "block" : "none";
    status.textContent = st.toast ?? (st.busy ? "working..." : "");
    if (!st.session) return;
    const scene = controller.renderFrame();
    canvas.width = scene.width * SCALE;
    canvas.height = scene.height * SCALE;
    const ctx = canvas.getContext("2d")!;
    const off = document.createElement("canvas");
    off.width = scene.width;
    off.height = scene.height;
    const frame = off.getContext("2d")!.createImageData(scene.width, scene.height);
    frame.data.set(scene.data);
    off.getContext("2d")!.putImageData(frame, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.drawImage(off, 0, 0, canvas.width, canvas.height);

    metricRe.textContent = st.session.re.toFixed(6);
    metricSs.textContent = st.session.ss.toFixed(6);
    stepLabel.textContent =
      `step ${st.session.step + 1}/${st.session.n_steps} (k=${st.session.dce_k})`;

    const cctx = chart.getContext("2d")!;
    cctx.clearRect(0, 0, chart.width, chart.height);
    const pts = chartPoints(st.session.history, st.session.cursor, DEFAULT_LAYOUT);
    cctx.strokeStyle = "#4477cc";
    cctx.beginPath();
    pts.forEach((p, i) => (i === 0 ? cctx.moveTo(p.x, p.y) : cctx.lineTo(p.x, p.y)));
    cctx.stroke();
    for (const p of pts) {
      cctx.fillStyle = p.current ? "#cc3311" : "#4477cc";
      cctx.beginPath();
      cctx.arc(p.x, p.y, p.current ? 4 : 3, 0, 2 * Math.PI);
      cctx.fill();
    }
  }

  controller.onChange(paint);

  shapeSelect.addEventListener("change", async () => {
    const shapeId = shapeSelect.value;
    await controller.start(shapeId, "browser");
    controller.setShapeLayer(await loadShapeLayer(client, shapeId));
    const ids = sessionsByShape.get(shapeId) ?? [];
    ids.push(controller.session.session_id);
    sessionsByShape.set(shapeId, ids);
  });

  canvas.addEventListener("click", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const x = Math.floor((ev.clientX - rect.left) / SCALE);
    const y = Math.floor((ev.clientY - rect.top) / SCALE);
    controller.clickCanvas(x, y, ev.shiftKey);
  });

  chart.addEventListener("click", (ev) => {
    const rect = chart.getBoundingClientRect();
    void controller.clickChart(ev.clientX - rect.left, ev.clientY - rect.top);
  });

  el<HTMLButtonElement>("btn-plus").addEventListener("click", () => {
    void controller.stepLadder(1);
  });
  el<HTMLButtonElement>("btn-minus").addEventListener("click", () => {
    void controller.stepLadder(-1);
  });
  el<HTMLButtonElement>("btn-prune").addEventListener("click", () => {
    void controller.pruneSelected();
  });
  el<HTMLButtonElement>("btn-undo").addEventListener("click", () => {
    void controller.undo();
  });
  el<HTMLButtonElement>("btn-redo").addEventListener("click", () => {
    void controller.redo();
  });
  document.addEventListener("keydown", (ev) => {
    if (ev.key === "Delete") void controller.pruneSelected();
  });

  el<HTMLButtonElement>("btn-export").addEventListener("click", async () => {
    const path = await controller.exportGt();
    if (path) {
      const link = el<HTMLAnchorElement>("export-link");
      link.textContent = path;
      link.style.display = "inline";
    }
  });

  el<HTMLInputElement>("transparency").addEventListener("input", (ev) => {
    controller.transparency(Number((ev.target as HTMLInputElement).value) / 100);
  });
  el<HTMLInputElement>("skeleton-color").addEventListener("input", (ev) => {
    const hex = (ev.target as HTMLInputElement).value;
    controller.skeletonColor([
      parseInt(hex.slice(1, 3), 16),
      parseInt(hex.slice(3, 5), 16),
      parseInt(hex.slice(5, 7), 16),
    ]);
  });
  el<HTMLInputElement>("boundary-visible").addEventListener("change", (ev) => {
    controller.boundaryVisible((ev.target as HTMLInputElement).checked);
  });

  el<HTMLButtonElement>("btn-integrate").addEventListener("click", async () => {
    const shapeId = controller.session.shape_id;
    const ids = sessionsByShape.get(shapeId) ?? [];
    if (ids.length < 2) {
      status.textContent = "open at least two sessions on this shape first";
      return;
    }
    const result = await client.integrate(shapeId, ids);
    integTable.innerHTML = "";
    const head = integTable.insertRow();
    for (const text of ["annotator", "error", "rationale"]) {
      const cell = document.createElement("th");
      cell.textContent = text;
      head.appendChild(cell);
    }
    for (const [annotator, err] of Object.entries(result.hints)) {
      const row = integTable.insertRow();
      row.insertCell().textContent = annotator;
      row.insertCell().textContent = err.toFixed(6);
      row.insertCell().textContent = result.rationale;
    }
  });
}

if (typeof document !== "undefined" && document.getElementById("scene")) {
  void main();
}
