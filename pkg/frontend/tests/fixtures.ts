import type { SessionPayload } from "../src/api.js";

/** Small hand-built session payload: a Y skeleton on a 16x16 grid. */
export function ySession(overrides: Partial<SessionPayload> = {}): SessionPayload {
  const up: [number, number][] = [[8, 8], [8, 7], [8, 6], [8, 5], [8, 4]];
  const left: [number, number][] = [[8, 8], [7, 9], [6, 10], [5, 11]];
  const right: [number, number][] = [[8, 8], [9, 9], [10, 10], [11, 11]];
  const points = [...up, ...left.slice(1), ...right.slice(1)];
  return {
    session_id: "fixture",
    shape_id: "y",
    annotator_id: "t",
    revision: 0,
    cursor: 0,
    n_states: 1,
    step: 0,
    dce_k: 20,
    n_steps: 17,
    pruned_branch_ids: [],
    width: 16,
    height: 16,
    skeleton_points: points,
    endpoints: [[8, 4], [5, 11], [11, 11]],
    junctions: [[8, 8]],
    branches: [
      { id: "up", path: up, closed: false, leaf: true, length: 4 },
      { id: "left", path: left, closed: false, leaf: true, length: 3 * Math.SQRT2 },
      { id: "right", path: right, closed: false, leaf: true, length: 3 * Math.SQRT2 },
    ],
    re: 0.1,
    ss: 0.25,
    history: [{ index: 0, re: 0.1, ss: 0.25, label: "step k=20" }],
    ...overrides,
  };
}
