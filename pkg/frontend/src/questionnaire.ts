/**
 * Star-rating questionnaire flow: one item at a time, 1-5 stars, nothing
 * submittable until every item has a rating. The presentation order is the
 * hub's per-session shuffle (seeded hub-side from the session's seeds), so
 * replays of the same session always see the same order.
 */

import type { QuestionnaireItemPayload } from "./protocol.js";

export class StarFlow {
  private index = 0;
  private ratings = new Map<string, number>();

  constructor(readonly items: QuestionnaireItemPayload[]) {
    if (items.length === 0) throw new Error("questionnaire has no items");
  }

  current(): QuestionnaireItemPayload | null {
    return this.index < this.items.length ? this.items[this.index] : null;
  }

  position(): { done: number; total: number } {
    return { done: this.index, total: this.items.length };
  }

  /** Rate the current item and advance; rejects out-of-range stars. */
  rate(stars: number): boolean {
    const item = this.current();
    if (item === null) return false;
    if (!Number.isInteger(stars) || stars < 1 || stars > 5) return false;
    this.ratings.set(item.item_id, stars);
    this.index += 1;
    return true;
  }

  isComplete(): boolean {
    return this.ratings.size === this.items.length;
  }

  responses(): Record<string, number> {
    if (!this.isComplete()) throw new Error("questionnaire not complete");
    return Object.fromEntries(this.ratings);
  }
}

/** Knowledge-test flow with the same no-skipping contract. */
export class TestFlow {
  private answers: number[] = [];

  constructor(
    readonly items: { prompt: string; options: string[]; roundTitle: string }[],
  ) {
    if (items.length === 0) throw new Error("test has no items");
  }

  static fromRounds(rounds: { round_id: string; title: string; items: { prompt: string; options: string[] }[] }[]): TestFlow {
    return new TestFlow(
      rounds.flatMap((r) => r.items.map((item) => ({ ...item, roundTitle: r.title }))),
    );
  }

  current(): { prompt: string; options: string[]; roundTitle: string } | null {
    return this.answers.length < this.items.length ? this.items[this.answers.length] : null;
  }

  position(): { done: number; total: number } {
    return { done: this.answers.length, total: this.items.length };
  }

  answer(option: number): boolean {
    const item = this.current();
    if (item === null) return false;
    if (!Number.isInteger(option) || option < 0 || option >= item.options.length) return false;
    this.answers.push(option);
    return true;
  }

  isComplete(): boolean {
    return this.answers.length === this.items.length;
  }

  responses(): number[] {
    if (!this.isComplete()) throw new Error("test not complete");
    return [...this.answers];
  }
}
