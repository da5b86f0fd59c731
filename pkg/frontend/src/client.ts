/**
 * SessionClient: the live connection between one browser tab and one hub
 * session over the WebSocket bridge.
 *
 * Sends are gated by the mirrored phase machine in state.ts, so no event
 * leaves the client that the hub would reject; each send is stamped with the
 * client clock and a monotone seq. The transport reconnects with backoff and
 * resumes from the hub's snapshot message; duplicated envelopes after a
 * resume are dropped by seq, making reconnection idempotent.
 */

import { makeEvent, parseEnvelope } from "./protocol.js";
import {
  applyEnvelope,
  gating,
  initialView,
  isSelfPractice,
  localEcho,
  type ClientSessionView,
} from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((err: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SessionClientOptions {
  hubAddress: string; // e.g. "http://127.0.0.1:8765"
  sessionId: string;
  socketFactory?: SocketFactory;
  now?: () => number;
  reconnectDelayMs?: number;
}

type Listener = (view: ClientSessionView) => void;

export function wsUrl(hubAddress: string, sessionId: string): string {
  return hubAddress.replace(/^http/, "ws").replace(/\/$/, "") + `/ws/${sessionId}`;
}

export class SessionClient {
  private viewState: ClientSessionView;
  private socket: SocketLike | null = null;
  private listeners: Listener[] = [];
  private outSeq = 0;
  private closedByUser = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private hintOpenedAt: number | null = null;
  private readonly opts: Required<SessionClientOptions>;

  constructor(options: SessionClientOptions) {
    this.opts = {
      socketFactory: (url: string) => new WebSocket(url) as unknown as SocketLike,
      now: () => Date.now(),
      reconnectDelayMs: 1000,
      ...options,
    };
    this.viewState = initialView(options.sessionId);
  }

  view(): ClientSessionView {
    return this.viewState;
  }

  onChange(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  connect(): Promise<ClientSessionView> {
    this.closedByUser = false;
    return new Promise((resolve, reject) => {
      let settled = false;
      const socket = this.opts.socketFactory(wsUrl(this.opts.hubAddress, this.opts.sessionId));
      this.socket = socket;
      socket.onopen = () => {
        this.update({ ...this.viewState, connected: true });
      };
      socket.onmessage = (ev) => {
        // browser text frames arrive as strings, node's ws gives Buffers
        const env = parseEnvelope(typeof ev.data === "string" ? ev.data : String(ev.data));
        if (!env) return;
        if (env.type === "error" && !settled) {
          settled = true;
          reject(new Error(String((env.payload as { error?: string }).error ?? "hub error")));
          return;
        }
        this.update(applyEnvelope({ ...this.viewState, connected: true }, env));
        if (env.type === "snapshot" && !settled) {
          settled = true;
          resolve(this.viewState);
        }
      };
      socket.onerror = () => {
        if (!settled) {
          settled = true;
          reject(new Error("websocket connection failed"));
        }
      };
      socket.onclose = () => {
        this.update({ ...this.viewState, connected: false });
        this.socket = null;
        if (!this.closedByUser) this.scheduleReconnect();
      };
    });
  }

  private scheduleReconnect(): void {
    if (this.reconnectTimer !== null) return;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      if (!this.closedByUser) this.connect().catch(() => this.scheduleReconnect());
    }, this.opts.reconnectDelayMs);
  }

  disconnect(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
  }

  private update(view: ClientSessionView): void {
    this.viewState = view;
    for (const listener of this.listeners) listener(view);
  }

  private send(type: string, payload: Record<string, unknown>): boolean {
    if (!this.socket) return false;
    this.outSeq += 1;
    this.socket.send(
      JSON.stringify(makeEvent(type, this.opts.sessionId, this.outSeq, this.opts.now(), payload)),
    );
    return true;
  }

  /** Right/wrong judgment of the tutee's answer (teaching condition). */
  submitFeedback(h: 1 | -1): boolean {
    if (!gating.canSubmitFeedback(this.viewState)) return false;
    if (!this.send("feedback_given", { h, action: null })) return false;
    this.settleHintBeforeAdvance();
    this.update(localEcho.feedbackSubmitted(this.viewState));
    return true;
  }

  /** The tutor's own answer (self-practice condition). */
  submitAnswer(action: number): boolean {
    const view = this.viewState;
    if (!gating.canSubmitAnswer(view) || view.question === null) return false;
    if (action < 0 || action >= view.question.options.length) return false;
    const correct = view.question.correct_action;
    const h = correct !== null && action === correct ? 1 : -1;
    if (!this.send("feedback_given", { h, action })) return false;
    this.settleHintBeforeAdvance();
    this.update(localEcho.feedbackSubmitted(this.viewState));
    return true;
  }

  openHint(): boolean {
    if (!gating.canUseHint(this.viewState) || this.viewState.hintOpen) return false;
    if (!this.send("hint_opened", {})) return false;
    this.hintOpenedAt = this.opts.now();
    this.update(localEcho.hintToggled(this.viewState, true));
    return true;
  }

  closeHint(): boolean {
    if (!this.viewState.hintOpen) return false;
    if (!this.send("hint_closed", {})) return false;
    this.hintOpenedAt = null;
    this.update(localEcho.hintToggled(this.viewState, false));
    return true;
  }

  private settleHintBeforeAdvance(): void {
    // the hub closes an open panel implicitly at feedback time; mirror that
    if (this.viewState.hintOpen) {
      this.hintOpenedAt = null;
      this.update(localEcho.hintToggled(this.viewState, false));
    }
  }

  /** One response per item, in presentation order; refuses partial sheets. */
  submitTest(responses: number[]): boolean {
    const view = this.viewState;
    if (!gating.canSubmitTest(view) || view.test === null) return false;
    if (responses.length !== view.test.n_items) return false;
    if (!this.send("test_responses", { kind: view.test.kind, responses })) return false;
    this.update(localEcho.testSubmitted(this.viewState));
    return true;
  }

  /** All star ratings at once; refuses partial or out-of-range sheets. */
  submitQuestionnaire(responses: Record<string, number>): boolean {
    const view = this.viewState;
    if (!gating.canSubmitQuestionnaire(view) || view.questionnaire === null) return false;
    const expected = new Set(view.questionnaire.map((item) => item.item_id));
    const got = Object.keys(responses);
    if (got.length !== expected.size || !got.every((k) => expected.has(k))) return false;
    if (!got.every((k) => Number.isInteger(responses[k]) && responses[k] >= 1 && responses[k] <= 5)) {
      return false;
    }
    if (!this.send("questionnaire_responses", { responses })) return false;
    this.update(localEcho.questionnaireSubmitted(this.viewState));
    return true;
  }

  isSelfPractice(): boolean {
    return isSelfPractice(this.viewState);
  }
}

export interface CreateSessionRequest {
  game_id: string;
  pseudonym: string;
  condition?: string;
  session_id?: string;
  alpha?: number;
  learner_seed?: number;
  schedule_seed?: number;
}

export async function createSession(
  hubAddress: string,
  request: CreateSessionRequest,
  fetchImpl: typeof fetch = fetch,
): Promise<string> {
  const resp = await fetchImpl(`${hubAddress.replace(/\/$/, "")}/api/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(request),
  });
  const body = (await resp.json()) as { session_id?: string; error?: string };
  if (!resp.ok || !body.session_id) {
    throw new Error(body.error ?? `session creation failed (${resp.status})`);
  }
  return body.session_id;
}
