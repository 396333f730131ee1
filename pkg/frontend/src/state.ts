/** Client view state. Metrics and geometry come verbatim from the server;
 *  the client owns only selection and display settings. */
import type { SessionPayload } from "./api.js";

export interface DisplaySettings {
  transparency: number; // shape layer alpha, 0..1
  skeletonColor: [number, number, number];
  boundaryVisible: boolean;
}

export const DEFAULT_SETTINGS: DisplaySettings = {
  transparency: 0.5,
  skeletonColor: [255, 0, 0],
  boundaryVisible: false,
};

export interface ViewState {
  session: SessionPayload | null;
  selected: Set<string>;
  settings: DisplaySettings;
  busy: boolean;
  offline: boolean;
  toast: string | null;
}

export function initialViewState(): ViewState {
  return {
    session: null,
    selected: new Set(),
    settings: { ...DEFAULT_SETTINGS },
    busy: false,
    offline: false,
    toast: null,
  };
}

/** Adopt a fresh server payload; selections that no longer name a current
 *  branch are dropped (the invariant: selected ids always exist in the latest
 *  server-reported branch list). */
export function syncSession(state: ViewState, payload: SessionPayload): ViewState {
  const valid = new Set(payload.branches.map((b) => b.id));
  const selected = new Set([...state.selected].filter((id) => valid.has(id)));
  return { ...state, session: payload, selected, offline: false };
}

export function toggleSelection(state: ViewState, branchId: string, additive: boolean): ViewState {
  if (!state.session) return state;
  const valid = new Set(state.session.branches.map((b) => b.id));
  if (!valid.has(branchId)) return state;
  const selected = new Set(additive ? state.selected : []);
  if (additive && selected.has(branchId)) {
    selected.delete(branchId);
  } else {
    selected.add(branchId);
  }
  return { ...state, selected };
}

export function clearSelection(state: ViewState): ViewState {
  return { ...state, selected: new Set() };
}

export function setTransparency(state: ViewState, value: number): ViewState {
  const transparency = Math.min(1, Math.max(0, value));
  return { ...state, settings: { ...state.settings, transparency } };
}

export function setSkeletonColor(state: ViewState, rgb: [number, number, number]): ViewState {
  return { ...state, settings: { ...state.settings, skeletonColor: rgb } };
}

export function setBoundaryVisible(state: ViewState, visible: boolean): ViewState {
  return { ...state, settings: { ...state.settings, boundaryVisible: visible } };
}

/** Distance from a point to the nearest pixel of a branch path. */
export function branchDistance(
  branch: { path: [number, number][] },
  x: number,
  y: number,
): number {
  let best = Infinity;
  for (const [px, py] of branch.path) {
    const d = Math.hypot(px - x, py - y);
    if (d < best) best = d;
  }
  return best;
}

/** Branch under the cursor within a tolerance band (canvas pixels). */
export function hitTestBranch(
  session: SessionPayload,
  x: number,
  y: number,
  tolerance = 6,
): string | null {
  let bestId: string | null = null;
  let best = tolerance;
  for (const b of session.branches) {
    const d = branchDistance(b, x, y);
    if (d <= best) {
      best = d;
      bestId = b.id;
    }
  }
  return bestId;
}
