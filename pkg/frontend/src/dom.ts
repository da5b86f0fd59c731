/**
 * Rendering layer: turns a ClientSessionView into touch-first DOM and wires
 * taps back into the SessionClient. No protocol or timing logic lives here;
 * everything user-visible derives from the view object.
 */

import type { SessionClient } from "./client.js";
import type { ClientSessionView } from "./state.js";
import { StarFlow, TestFlow } from "./questionnaire.js";

function el(tag: string, className: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text) node.textContent = text;
  return node;
}

export class SessionScreen {
  private testFlow: TestFlow | null = null;
  private testKind: string | null = null;
  private starFlow: StarFlow | null = null;

  constructor(private root: HTMLElement, private client: SessionClient) {
    client.onChange((view) => this.render(view));
    this.render(client.view());
  }

  private render(view: ClientSessionView): void {
    this.root.replaceChildren();
    this.root.appendChild(this.banner(view));
    if (!view.connected) {
      this.root.appendChild(el("div", "notice", "Reconnecting…"));
      return;
    }
    switch (view.phase) {
      case "test":
        this.renderTest(view);
        break;
      case "questionnaire":
        this.renderQuestionnaire(view);
        break;
      case "await_feedback":
      case "review":
      case "posing":
        this.renderGame(view);
        break;
      case "completed":
        this.root.appendChild(el("div", "notice big", "All done! Thank you for teaching!"));
        break;
      default:
        this.root.appendChild(el("div", "notice", "Waiting for the session to begin…"));
    }
  }

  private banner(view: ClientSessionView): HTMLElement {
    const bar = el("header", "banner");
    bar.appendChild(el("span", "title", view.gameTitle || "teachhub"));
    if (view.progressTotal > 0) {
      const progress = el("span", "progress", `${view.progressDone} / ${view.progressTotal}`);
      const meter = el("span", "meter");
      const fill = el("span", "meter-fill");
      fill.style.width = `${Math.round((100 * view.progressDone) / view.progressTotal)}%`;
      meter.appendChild(fill);
      bar.appendChild(meter);
      bar.appendChild(progress);
    }
    return bar;
  }

  private renderGame(view: ClientSessionView): void {
    if (view.review) {
      const card = el("div", "card review");
      card.appendChild(el("div", "prompt", "Let's look at it together:"));
      card.appendChild(el("div", "correct", view.review.correct_label));
      card.appendChild(el("div", "hint-text", view.review.hint));
      this.root.appendChild(card);
      return;
    }
    if (!view.question) {
      this.root.appendChild(el("div", "notice", "Next question is coming…"));
      return;
    }
    const selfPractice = this.client.isSelfPractice();
    const card = el("div", "card");
    card.appendChild(el("div", "prompt big", view.question.prompt));
    const optionList = el("div", "options");
    view.question.options.forEach((label, index) => {
      const button = el("button", "option", label) as HTMLButtonElement;
      if (!selfPractice && view.robotAnswer === index) button.classList.add("robot-pick");
      if (selfPractice) {
        button.disabled = !view.feedbackEnabled;
        button.addEventListener("click", () => this.client.submitAnswer(index));
      } else {
        button.disabled = true; // display only: the tutee answers, the tutor judges
      }
      optionList.appendChild(button);
    });
    card.appendChild(optionList);

    if (!selfPractice) {
      const judge = el("div", "judge");
      const right = el("button", "feedback right", "✓ Right") as HTMLButtonElement;
      const wrong = el("button", "feedback wrong", "✗ Wrong") as HTMLButtonElement;
      right.disabled = wrong.disabled = !view.feedbackEnabled;
      right.addEventListener("click", () => this.client.submitFeedback(1));
      wrong.addEventListener("click", () => this.client.submitFeedback(-1));
      judge.append(right, wrong);
      card.appendChild(judge);
    }

    if (view.reminderShown && view.feedbackEnabled) {
      card.appendChild(el("div", "nudge", "Was the answer right or wrong?"));
    }
    if (view.hintInvited && !view.hintOpen) {
      card.appendChild(el("div", "nudge", "Not sure? The hint button can help."));
    }

    const hintButton = el(
      "button",
      "hint-toggle",
      view.hintOpen ? "Close hint" : "Hint",
    ) as HTMLButtonElement;
    hintButton.disabled = view.phase !== "await_feedback";
    hintButton.addEventListener("click", () =>
      view.hintOpen ? this.client.closeHint() : this.client.openHint(),
    );
    card.appendChild(hintButton);
    if (view.hintOpen) card.appendChild(el("div", "hint-text", view.question.hint));
    this.root.appendChild(card);
  }

  private renderTest(view: ClientSessionView): void {
    if (!view.test) return;
    if (this.testFlow === null || this.testKind !== view.test.kind) {
      this.testFlow = TestFlow.fromRounds(view.test.rounds);
      this.testKind = view.test.kind;
    }
    const flow = this.testFlow;
    const item = flow.current();
    const card = el("div", "card");
    card.appendChild(el("div", "round-title", item ? item.roundTitle : ""));
    const { done, total } = flow.position();
    card.appendChild(el("div", "progress", `Question ${Math.min(done + 1, total)} of ${total}`));
    if (item) {
      card.appendChild(el("div", "prompt big", item.prompt));
      const optionList = el("div", "options");
      item.options.forEach((label, index) => {
        const button = el("button", "option", label);
        button.addEventListener("click", () => {
          flow.answer(index);
          if (flow.isComplete()) {
            this.client.submitTest(flow.responses());
            this.testFlow = null;
            this.testKind = null;
          }
          this.render(this.client.view());
        });
        optionList.appendChild(button);
      });
      card.appendChild(optionList);
    }
    this.root.appendChild(card);
  }

  private renderQuestionnaire(view: ClientSessionView): void {
    if (!view.questionnaire) {
      this.root.appendChild(el("div", "notice", "Thanks! Wrapping up…"));
      return;
    }
    if (this.starFlow === null) this.starFlow = new StarFlow(view.questionnaire);
    const flow = this.starFlow;
    const item = flow.current();
    const card = el("div", "card");
    if (item) {
      const { done, total } = flow.position();
      card.appendChild(el("div", "progress", `${done + 1} of ${total}`));
      card.appendChild(el("div", "prompt", item.prompt));
      const stars = el("div", "stars");
      for (let n = 1; n <= 5; n += 1) {
        const star = el("button", "star", "★");
        star.setAttribute("aria-label", `${n} stars`);
        star.addEventListener("click", () => {
          flow.rate(n);
          if (flow.isComplete()) {
            this.client.submitQuestionnaire(flow.responses());
            this.starFlow = null;
          }
          this.render(this.client.view());
        });
        stars.appendChild(star);
      }
      card.appendChild(stars);
    }
    this.root.appendChild(card);
  }
}
