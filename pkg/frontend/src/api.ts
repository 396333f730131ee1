/** Typed client for the annotation service. The server is the single source
 *  of truth: every mutation carries the current revision and the client only
 *  updates state from responses. */
import { z } from "zod";

const Point = z.tuple([z.number(), z.number()]);

export const BranchSchema = z.object({
  id: z.string(),
  path: z.array(Point),
  closed: z.boolean(),
  leaf: z.boolean(),
  length: z.number(),
});

export const HistoryEntrySchema = z.object({
  index: z.number().int(),
  re: z.number(),
  ss: z.number(),
  label: z.string(),
});

export const SessionStateSchema = z.object({
  session_id: z.string(),
  shape_id: z.string(),
  annotator_id: z.string(),
  revision: z.number().int(),
  cursor: z.number().int(),
  n_states: z.number().int(),
  step: z.number().int(),
  dce_k: z.number().int(),
  n_steps: z.number().int(),
  pruned_branch_ids: z.array(z.string()),
  width: z.number().int(),
  height: z.number().int(),
  skeleton_points: z.array(Point),
  endpoints: z.array(Point),
  junctions: z.array(Point),
  branches: z.array(BranchSchema),
  re: z.number(),
  ss: z.number(),
  history: z.array(HistoryEntrySchema),
});

export type Branch = z.infer<typeof BranchSchema>;
export type HistoryEntry = z.infer<typeof HistoryEntrySchema>;
export type SessionPayload = z.infer<typeof SessionStateSchema>;

export const IntegrationSchema = z.object({
  rationale: z.string(),
  votes: z.number().int(),
  skeleton_points: z.array(Point),
  width: z.number().int(),
  height: z.number().int(),
  hints: z.record(z.string(), z.number()),
});
export type IntegrationResult = z.infer<typeof IntegrationSchema>;

/** Manifest written next to an exported GT bundle (gt.json). */
export const GtManifestSchema = z.object({
  format_version: z.literal(1),
  coordinate_convention: z.string().startsWith("x right, y down"),
  width: z.number().int().positive(),
  height: z.number().int().positive(),
  endpoints: z.array(Point),
  junctions: z.array(Point),
  files: z.array(z.string()),
  has_object: z.boolean(),
  provenance: z.record(z.string(), z.unknown()),
});

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class StaleRevisionError extends ApiError {
  constructor(message: string) {
    super(409, message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, `network failure: ${String(err)}`);
  }
  if (res.status === 409) {
    throw new StaleRevisionError(await res.text());
  }
  if (!res.ok) {
    throw new ApiError(res.status, await res.text());
  }
  return (await res.json()) as T;
}

export class AnnotationClient {
  constructor(readonly baseUrl: string) {}

  private post(path: string, body: unknown): Promise<unknown> {
    return request(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async listShapes(): Promise<string[]> {
    const doc = await request<{ shapes: string[] }>(`${this.baseUrl}/shapes`);
    return doc.shapes;
  }

  shapeUrl(shapeId: string): string {
    return `${this.baseUrl}/shapes/${shapeId}.png`;
  }

  async createSession(
    shapeId: string,
    annotatorId: string,
    opts: { kMin?: number; kMax?: number; fillHoles?: boolean } = {},
  ): Promise<SessionPayload> {
    const doc = await this.post("/sessions", {
      shape_id: shapeId,
      annotator_id: annotatorId,
      k_min: opts.kMin ?? 4,
      k_max: opts.kMax ?? 30,
      fill_holes: opts.fillHoles ?? true,
    });
    return SessionStateSchema.parse(doc);
  }

  async getSession(sessionId: string): Promise<SessionPayload> {
    const doc = await request(`${this.baseUrl}/sessions/${sessionId}`);
    return SessionStateSchema.parse(doc);
  }

  async step(sessionId: string, direction: 1 | -1, revision: number): Promise<SessionPayload> {
    const doc = await this.post(`/sessions/${sessionId}/step`, { direction, revision });
    return SessionStateSchema.parse(doc);
  }

  async prune(sessionId: string, branchIds: string[], revision: number): Promise<SessionPayload> {
    const doc = await this.post(`/sessions/${sessionId}/prune`, {
      branch_ids: branchIds,
      revision,
    });
    return SessionStateSchema.parse(doc);
  }

  async undo(sessionId: string, revision: number): Promise<SessionPayload> {
    const doc = await this.post(`/sessions/${sessionId}/undo`, { revision });
    return SessionStateSchema.parse(doc);
  }

  async redo(sessionId: string, revision: number): Promise<SessionPayload> {
    const doc = await this.post(`/sessions/${sessionId}/redo`, { revision });
    return SessionStateSchema.parse(doc);
  }

  async restore(sessionId: string, index: number, revision: number): Promise<SessionPayload> {
    const doc = await this.post(`/sessions/${sessionId}/restore`, { index, revision });
    return SessionStateSchema.parse(doc);
  }

  async exportSession(sessionId: string): Promise<{ manifest_path: string }> {
    return (await this.post(`/sessions/${sessionId}/export`, {})) as {
      manifest_path: string;
    };
  }

  async integrate(shapeId: string, sessionIds: string[]): Promise<IntegrationResult> {
    const doc = await this.post("/integrate", {
      shape_id: shapeId,
      session_ids: sessionIds,
    });
    return IntegrationSchema.parse(doc);
  }
}
