/** Boot: the connect form, then hand the page over to SessionScreen. */

import { SessionClient, createSession } from "./client.js";
import { SessionScreen } from "./dom.js";
import { normalizePseudonym, validatePseudonym } from "./pseudonym.js";

function defaultHubAddress(): string {
  return window.location.origin.startsWith("http")
    ? window.location.origin
    : "http://127.0.0.1:8765";
}

async function start(form: HTMLFormElement, root: HTMLElement): Promise<void> {
  const data = new FormData(form);
  const pseudonym = normalizePseudonym(String(data.get("pseudonym") ?? ""));
  const problem = validatePseudonym(pseudonym);
  const errorBox = form.querySelector(".form-error") as HTMLElement;
  if (problem) {
    errorBox.textContent = problem;
    return;
  }
  errorBox.textContent = "";
  const hubAddress = String(data.get("hub") ?? defaultHubAddress());
  try {
    const sessionId = await createSession(hubAddress, {
      game_id: String(data.get("game") ?? "body_parts"),
      pseudonym,
      condition: String(data.get("condition") ?? "learning_by_teaching"),
    });
    const client = new SessionClient({ hubAddress, sessionId });
    await client.connect();
    form.hidden = true;
    root.hidden = false;
    new SessionScreen(root, client);
  } catch (err) {
    errorBox.textContent = err instanceof Error ? err.message : String(err);
  }
}

window.addEventListener("DOMContentLoaded", () => {
  const form = document.getElementById("connect-form") as HTMLFormElement;
  const root = document.getElementById("session-root") as HTMLElement;
  (form.querySelector('input[name="hub"]') as HTMLInputElement).value = defaultHubAddress();
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void start(form, root);
  });
});
