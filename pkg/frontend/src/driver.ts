/**
 * Scripted tutor: plays a full session through a SessionClient exactly the
 * way a person would through the screens: waits for the tutee's answer,
 * optionally reads the hint, presses right/wrong, fills in the tests and the
 * star questionnaire. Used by the end-to-end test and handy for demos
 * against a live hub.
 */

import type { SessionClient } from "./client.js";
import type { ClientSessionView } from "./state.js";
import { StarFlow, TestFlow } from "./questionnaire.js";

export interface TutorKnowledge {
  /**
   * prompt -> acceptable correct labels. A prompt may appear in several test
   * rounds with different option vocabularies (translations, images), so all
   * of its correct labels are listed and matched against the offered options.
   */
  correctLabels: Record<string, string[]>;
}

export interface ScriptedTutorOptions {
  /** open the hint panel for this long on the given iteration (0-based) */
  hintOnIteration?: number;
  hintHoldMs?: number;
  /** star rating used for every questionnaire item */
  stars?: number;
  pollMs?: number;
  timeoutMs?: number;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class ScriptedTutor {
  private opts: Required<ScriptedTutorOptions>;

  constructor(
    private client: SessionClient,
    private knowledge: TutorKnowledge,
    options: ScriptedTutorOptions = {},
  ) {
    this.opts = {
      hintOnIteration: 2,
      hintHoldMs: 1000,
      stars: 4,
      pollMs: 10,
      timeoutMs: 60_000,
      ...options,
    };
  }

  private async waitFor<T>(probe: (view: ClientSessionView) => T | null): Promise<T> {
    const deadline = Date.now() + this.opts.timeoutMs;
    for (;;) {
      const value = probe(this.client.view());
      if (value !== null) return value;
      if (Date.now() > deadline) throw new Error("timed out waiting for the hub");
      await sleep(this.opts.pollMs);
    }
  }

  private answerFor(prompt: string, options: string[]): number {
    const labels = this.knowledge.correctLabels[prompt] ?? [];
    const index = options.findIndex((option) => labels.includes(option));
    if (index < 0) throw new Error(`no known answer for "${prompt}" among ${options.join(", ")}`);
    return index;
  }

  private async completeTest(): Promise<void> {
    const test = await this.waitFor((v) => (v.phase === "test" && v.test ? v.test : null));
    const flow = TestFlow.fromRounds(test.rounds);
    for (let item = flow.current(); item !== null; item = flow.current()) {
      flow.answer(this.answerFor(item.prompt, item.options));
    }
    if (!this.client.submitTest(flow.responses())) throw new Error("test submission rejected");
  }

  private async completeQuestionnaire(): Promise<void> {
    const items = await this.waitFor((v) =>
      v.phase === "questionnaire" && v.questionnaire ? v.questionnaire : null,
    );
    const flow = new StarFlow(items);
    while (flow.current() !== null) flow.rate(this.opts.stars);
    if (!this.client.submitQuestionnaire(flow.responses())) {
      throw new Error("questionnaire submission rejected");
    }
  }

  /** Drive the whole session; resolves once the post-game questionnaire is in. */
  async run(): Promise<void> {
    await this.completeTest(); // pre-test

    for (;;) {
      const view = await this.waitFor((v) => {
        if (v.phase === "test" && v.test) return v; // post-test reached
        if (v.phase === "await_feedback" && v.feedbackEnabled && v.question) return v;
        return null;
      });
      if (view.phase === "test") break;

      const question = view.question!;
      if (question.progress_done === this.opts.hintOnIteration && this.opts.hintHoldMs > 0) {
        this.client.openHint();
        await sleep(this.opts.hintHoldMs);
        this.client.closeHint();
      }
      if (this.client.isSelfPractice()) {
        const pick = this.answerFor(question.prompt, [...question.options]);
        if (!this.client.submitAnswer(pick)) throw new Error("answer rejected");
      } else {
        const correct = this.answerFor(question.prompt, [...question.options]);
        const h = view.robotAnswer === correct ? 1 : -1;
        if (!this.client.submitFeedback(h)) throw new Error("feedback rejected");
      }
    }

    await this.completeTest(); // post-test
    await this.completeQuestionnaire();
    // finalization (outro + session_end) is triggered by the operator/hub
  }
}

/** Truthful knowledge of the bundled body-parts pack (training + all test rounds). */
export function bodyPartsKnowledge(): TutorKnowledge {
  const en2fr: Record<string, string> = {
    hand: "la main",
    head: "la tête",
    foot: "le pied",
    belly: "le ventre",
    eye: "l'œil",
  };
  const correctLabels: Record<string, string[]> = {};
  for (const [en, fr] of Object.entries(en2fr)) {
    correctLabels[en] = [fr]; // training turns and the EN -> FR round
    correctLabels[fr] = [en, `img_${en}`]; // FR -> EN and FR -> image rounds
  }
  return { correctLabels };
}
