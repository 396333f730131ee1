/** Interaction loop shared by the DOM app and the end-to-end tests.
 *
 *  Every action is a service call carrying the current revision; state only
 *  changes from server responses. A 409 (stale revision) triggers a refresh
 *  and surfaces a retry prompt; network failures raise the offline flag
 *  without mutating annotation state. At most one mutation is in flight.
 */
import { AnnotationClient, ApiError, SessionPayload, StaleRevisionError } from "./api.js";
import { chartHitTest, chartPoints, ChartLayout, DEFAULT_LAYOUT } from "./chart.js";
import { renderScene, Scene, ShapeLayer } from "./render.js";
import {
  clearSelection,
  hitTestBranch,
  initialViewState,
  setBoundaryVisible,
  setSkeletonColor,
  setTransparency,
  syncSession,
  toggleSelection,
  ViewState,
} from "./state.js";

export type Listener = (state: ViewState) => void;

export class AnnotatorController {
  state: ViewState = initialViewState();
  shapeLayer: ShapeLayer | null = null;
  private listeners: Listener[] = [];
  private inflight = false;

  constructor(readonly client: AnnotationClient) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const l of this.listeners) l(this.state);
  }

  private set(next: ViewState): void {
    this.state = next;
    this.emit();
  }

  get session(): SessionPayload {
    if (!this.state.session) throw new Error("no live session");
    return this.state.session;
  }

  async start(shapeId: string, annotatorId: string, opts: {
    kMin?: number; kMax?: number; fillHoles?: boolean;
  } = {}): Promise<void> {
    const payload = await this.client.createSession(shapeId, annotatorId, opts);
    this.set(syncSession(this.state, payload));
  }

  setShapeLayer(layer: ShapeLayer | null): void {
    this.shapeLayer = layer;
    this.emit();
  }

  /** Run one mutation against the current revision, refreshing on conflict. */
  private async mutate(
    fn: (session: SessionPayload) => Promise<SessionPayload>,
  ): Promise<boolean> {
    if (this.inflight) return false;
    const session = this.session;
    this.inflight = true;
    this.set({ ...this.state, busy: true, toast: null });
    try {
      const payload = await fn(session);
      this.set({ ...syncSession(this.state, payload), busy: false });
      return true;
    } catch (err) {
      if (err instanceof StaleRevisionError) {
        const fresh = await this.client.getSession(session.session_id);
        this.set({
          ...syncSession(this.state, fresh),
          busy: false,
          toast: "Session changed elsewhere; refreshed. Retry the action.",
        });
        return false;
      }
      if (err instanceof ApiError && err.status === 0) {
        this.set({ ...this.state, busy: false, offline: true });
        return false;
      }
      if (err instanceof ApiError) {
        this.set({ ...this.state, busy: false, toast: err.message });
        return false;
      }
      throw err;
    } finally {
      this.inflight = false;
    }
  }

  /** Canvas click: select the branch under the cursor (shift = multi-select). */
  clickCanvas(x: number, y: number, shift: boolean): void {
    if (!this.state.session) return;
    const hit = hitTestBranch(this.state.session, x, y);
    if (hit === null) {
      this.set(clearSelection(this.state));
    } else {
      this.set(toggleSelection(this.state, hit, shift));
    }
  }

  /** Prune every selected branch in one call. */
  async pruneSelected(): Promise<boolean> {
    const ids = [...this.state.selected].sort();
    if (ids.length === 0) return false;
    const ok = await this.mutate((s) =>
      this.client.prune(s.session_id, ids, s.revision),
    );
    if (ok) this.set(clearSelection(this.state));
    return ok;
  }

  /** '+' = toward more branches, '-' = toward fewer. */
  async stepLadder(direction: 1 | -1): Promise<boolean> {
    return this.mutate((s) => this.client.step(s.session_id, direction, s.revision));
  }

  async undo(): Promise<boolean> {
    return this.mutate((s) => this.client.undo(s.session_id, s.revision));
  }

  async redo(): Promise<boolean> {
    return this.mutate((s) => this.client.redo(s.session_id, s.revision));
  }

  /** History-chart click: restore the clicked state. */
  async clickChart(x: number, y: number, layout: ChartLayout = DEFAULT_LAYOUT): Promise<boolean> {
    const s = this.session;
    const pts = chartPoints(s.history, s.cursor, layout);
    const index = chartHitTest(pts, x, y);
    if (index === null || index === s.cursor) return false;
    return this.mutate((sess) => this.client.restore(sess.session_id, index, sess.revision));
  }

  async exportGt(): Promise<string | null> {
    const s = this.session;
    try {
      const doc = await this.client.exportSession(s.session_id);
      return doc.manifest_path;
    } catch (err) {
      if (err instanceof ApiError) {
        this.set({ ...this.state, toast: err.message });
        return null;
      }
      throw err;
    }
  }

  transparency(value: number): void {
    this.set(setTransparency(this.state, value));
  }

  skeletonColor(rgb: [number, number, number]): void {
    this.set(setSkeletonColor(this.state, rgb));
  }

  boundaryVisible(visible: boolean): void {
    this.set(setBoundaryVisible(this.state, visible));
  }

  renderFrame(): Scene {
    return renderScene(this.session, this.state.selected, this.state.settings, this.shapeLayer);
  }
}
