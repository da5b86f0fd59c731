/**
 * Client session view: a pure reducer over hub envelopes.
 *
 * The view mirrors the hub's phase machine so the UI can gate its own events
 * client-side (it never sends anything the hub would reject) and so a
 * reconnect can resume from the snapshot message alone. All timing-related
 * state (reminders, hint invitations) comes from hub messages, never from
 * local timers; duplicate envelopes after a reconnect are dropped by seq.
 */

import type {
  Condition,
  Envelope,
  QuestionPayload,
  QuestionnaireItemPayload,
  ReviewPayload,
  TestPayload,
} from "./protocol.js";

export type Phase =
  | "connecting"
  | "intro"
  | "test"
  | "posing"
  | "await_feedback"
  | "review"
  | "questionnaire"
  | "completed";

export interface ClientSessionView {
  sessionId: string;
  connected: boolean;
  condition: Condition | null;
  phase: Phase;
  gameTitle: string;
  progressDone: number;
  progressTotal: number;
  question: QuestionPayload | null;
  robotAnswer: number | null;
  /** right/wrong buttons (teaching) or answer options (self-practice) live */
  feedbackEnabled: boolean;
  hintOpen: boolean;
  reminderShown: boolean;
  hintInvited: boolean;
  review: ReviewPayload | null;
  test: TestPayload | null;
  questionnaire: QuestionnaireItemPayload[] | null;
  ended: boolean;
  lastSeq: number;
}

export function initialView(sessionId: string): ClientSessionView {
  return {
    sessionId,
    connected: false,
    condition: null,
    phase: "connecting",
    gameTitle: "",
    progressDone: 0,
    progressTotal: 0,
    question: null,
    robotAnswer: null,
    feedbackEnabled: false,
    hintOpen: false,
    reminderShown: false,
    hintInvited: false,
    review: null,
    test: null,
    questionnaire: null,
    ended: false,
    lastSeq: -1,
  };
}

export function isSelfPractice(view: ClientSessionView): boolean {
  return view.condition === "self_practice";
}

/** Client-side mirrors of the hub's phase gating. */
export const gating = {
  canSubmitFeedback(view: ClientSessionView): boolean {
    return view.phase === "await_feedback" && view.feedbackEnabled && !isSelfPractice(view);
  },
  canSubmitAnswer(view: ClientSessionView): boolean {
    return view.phase === "await_feedback" && view.feedbackEnabled && isSelfPractice(view);
  },
  canUseHint(view: ClientSessionView): boolean {
    return view.phase === "await_feedback" && view.question !== null;
  },
  canSubmitTest(view: ClientSessionView): boolean {
    return view.phase === "test" && view.test !== null;
  },
  canSubmitQuestionnaire(view: ClientSessionView): boolean {
    return view.phase === "questionnaire" && view.questionnaire !== null;
  },
};

function applySnapshot(view: ClientSessionView, payload: Record<string, unknown>): ClientSessionView {
  const next: ClientSessionView = {
    ...initialView(view.sessionId),
    connected: true,
    lastSeq: view.lastSeq,
    condition: (payload.condition as Condition) ?? null,
    gameTitle: String(payload.title ?? ""),
    phase: (payload.phase as Phase) ?? "connecting",
    progressDone: Number(payload.progress_done ?? 0),
    progressTotal: Number(payload.progress_total ?? 0),
    feedbackEnabled: Boolean(payload.feedback_enabled),
  };
  if (payload.question && typeof payload.question === "object") {
    const q = payload.question as Record<string, unknown>;
    next.question = {
      iteration: next.progressDone,
      state_id: String(q.state_id),
      prompt: String(q.prompt),
      options: (q.options as string[]) ?? [],
      hint: String(q.hint ?? ""),
      progress_done: next.progressDone,
      progress_total: next.progressTotal,
      correct_action: (payload.correct_action as number | undefined) ?? null,
    };
  }
  if (typeof payload.robot_answer === "number") next.robotAnswer = payload.robot_answer;
  if (payload.test && typeof payload.test === "object") {
    const t = payload.test as Record<string, unknown>;
    const rounds = (t.rounds as TestPayload["rounds"]) ?? [];
    next.test = {
      kind: t.kind as TestPayload["kind"],
      rounds,
      n_items: rounds.reduce((acc, r) => acc + r.items.length, 0),
    };
  }
  if (Array.isArray(payload.questionnaire)) {
    next.questionnaire = payload.questionnaire as QuestionnaireItemPayload[];
  }
  return next;
}

export function applyEnvelope(view: ClientSessionView, env: Envelope): ClientSessionView {
  if (env.session_id !== view.sessionId) return view;
  if (env.type === "snapshot") return applySnapshot(view, env.payload);
  if (env.seq !== null) {
    if (env.seq <= view.lastSeq) return view; // replayed after reconnect
    view = { ...view, lastSeq: env.seq };
  }

  switch (env.type) {
    case "show_question": {
      const q = env.payload as unknown as QuestionPayload;
      return {
        ...view,
        phase: "await_feedback",
        question: q,
        robotAnswer: null,
        feedbackEnabled: false,
        hintOpen: false,
        reminderShown: false,
        hintInvited: false,
        review: null,
        progressDone: q.progress_done,
        progressTotal: q.progress_total,
      };
    }
    case "robot_answer":
      return { ...view, robotAnswer: Number(env.payload.action) };
    case "show_feedback_buttons":
      return { ...view, feedbackEnabled: true };
    case "show_review":
      return {
        ...view,
        phase: "review",
        feedbackEnabled: false,
        review: env.payload as unknown as ReviewPayload,
      };
    case "prompt_reminder":
      return { ...view, reminderShown: true };
    case "invite_hint":
      return { ...view, hintInvited: true };
    case "show_test": {
      const t = env.payload as unknown as TestPayload;
      return { ...view, phase: "test", test: t, question: null, robotAnswer: null, feedbackEnabled: false };
    }
    case "show_questionnaire":
      return {
        ...view,
        phase: "questionnaire",
        test: null,
        questionnaire: (env.payload.items as QuestionnaireItemPayload[]) ?? [],
      };
    case "session_end":
      return { ...view, phase: "completed", ended: true, feedbackEnabled: false };
    default:
      // robot-topic or future message kinds: nothing for the UI to do
      return view;
  }
}

/** Local echoes of our own sends, so buttons disable immediately. */
export const localEcho = {
  feedbackSubmitted(view: ClientSessionView): ClientSessionView {
    return { ...view, feedbackEnabled: false };
  },
  hintToggled(view: ClientSessionView, open: boolean): ClientSessionView {
    return { ...view, hintOpen: open };
  },
  testSubmitted(view: ClientSessionView): ClientSessionView {
    return { ...view, test: null };
  },
  questionnaireSubmitted(view: ClientSessionView): ClientSessionView {
    return { ...view, questionnaire: null };
  },
};
