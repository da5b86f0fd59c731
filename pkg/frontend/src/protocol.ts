/**
 * Wire protocol types for the hub's envelope format, mirrored verbatim from
 * the hub side (see docs/wire-protocol.md in the repository root). The client
 * only ever *reads* `to_ui` messages and *writes* `from_client` events.
 */

export interface Envelope {
  type: string;
  session_id: string;
  seq: number | null;
  timestamp_ms: number;
  payload: Record<string, unknown>;
}

export type Condition = "learning_by_teaching" | "self_practice";

export interface QuestionPayload {
  iteration: number;
  state_id: string;
  prompt: string;
  options: string[];
  hint: string;
  progress_done: number;
  progress_total: number;
  correct_action: number | null;
}

export interface ReviewPayload {
  state_id: string;
  correct_action: number;
  correct_label: string;
  hint: string;
}

export interface TestItemPayload {
  prompt: string;
  options: string[];
}

export interface TestRoundPayload {
  round_id: string;
  title: string;
  items: TestItemPayload[];
}

export interface TestPayload {
  kind: "pre" | "post" | "retention";
  n_items: number;
  rounds: TestRoundPayload[];
}

export interface QuestionnaireItemPayload {
  item_id: string;
  subscale: "enjoyment" | "competence" | "engagement" | "difficulty";
  prompt: string;
}

export function makeEvent(
  type: string,
  sessionId: string,
  seq: number,
  timestampMs: number,
  payload: Record<string, unknown>,
): Envelope {
  return { type, session_id: sessionId, seq, timestamp_ms: timestampMs, payload };
}

export function parseEnvelope(data: unknown): Envelope | null {
  let raw: unknown = data;
  if (typeof raw === "string") {
    try {
      raw = JSON.parse(raw);
    } catch {
      return null;
    }
  }
  if (typeof raw !== "object" || raw === null) return null;
  const env = raw as Record<string, unknown>;
  if (typeof env.type !== "string" || typeof env.session_id !== "string") return null;
  return {
    type: env.type,
    session_id: env.session_id,
    seq: typeof env.seq === "number" ? env.seq : null,
    timestamp_ms: typeof env.timestamp_ms === "number" ? env.timestamp_ms : 0,
    payload: (typeof env.payload === "object" && env.payload !== null
      ? env.payload
      : {}) as Record<string, unknown>,
  };
}
