/**
 * Browser bootstrap: one annotator session per tab, reviewer view on #review.
 */

import { ApiClient } from "./api.js";
import { ReviewerDashboard } from "./dashboard.js";
import {
  renderAnnotation,
  renderDone,
  renderError,
  renderLogin,
  renderNotice,
} from "./render.js";
import { AnnotationSession, SessionState } from "./session.js";

const TOKEN_KEY = "lexcomp-annotator-token";

async function obtainToken(client: ApiClient, forceNew = false): Promise<string> {
  const cached = forceNew ? null : localStorage.getItem(TOKEN_KEY);
  if (cached) {
    return cached;
  }
  const { token } = await client.register();
  localStorage.setItem(TOKEN_KEY, token);
  return token;
}

function bindAnnotator(root: HTMLElement, session: AnnotationSession, client: ApiClient): void {
  const redraw = (state: SessionState) => {
    switch (state.kind) {
      case "loading":
        root.innerHTML = `<p class="loading">Loading…</p>`;
        break;
      case "annotating":
        root.innerHTML = renderAnnotation(state, session.submittedCount);
        root.querySelectorAll<HTMLInputElement>("input[name=likert]").forEach((input) => {
          input.addEventListener("change", () => {
            session.select(Number(input.value));
            const btn = root.querySelector<HTMLButtonElement>("#submit-btn");
            if (btn) {
              btn.disabled = !session.canSubmit;
            }
          });
        });
        root.querySelector<HTMLButtonElement>("#submit-btn")?.addEventListener("click", () => {
          void session.submit();
        });
        break;
      case "done":
        root.innerHTML = renderDone(session.submittedCount);
        break;
      case "login":
        root.innerHTML = renderLogin();
        root.querySelector<HTMLButtonElement>("#login-btn")?.addEventListener("click", () => {
          void obtainToken(client, true).then(() => location.reload());
        });
        break;
      case "error":
        root.innerHTML = renderError(state.message);
        root.querySelector<HTMLButtonElement>("#retry-btn")?.addEventListener("click", () => {
          void session.loadNext();
        });
        break;
    }
  };
  session.events.onChange = redraw;
  session.events.onNotice = (message) => {
    const banner = document.createElement("div");
    banner.innerHTML = renderNotice(message);
    root.prepend(banner);
    setTimeout(() => banner.remove(), 4000);
  };
  redraw(session.state);
}

async function bootAnnotator(root: HTMLElement): Promise<void> {
  const client = new ApiClient("");
  const token = await obtainToken(client);
  const session = new AnnotationSession(client, token, {});
  bindAnnotator(root, session, client);
  await session.loadNext();
}

async function bootReviewer(root: HTMLElement): Promise<void> {
  const client = new ApiClient("");
  const dashboard = new ReviewerDashboard(client);
  const batch = Number(new URLSearchParams(location.search).get("batch") ?? "0");

  const redraw = () => {
    root.innerHTML = dashboard.html();
    root.querySelectorAll<HTMLButtonElement>(".reject-btn").forEach((btn) => {
      btn.addEventListener("click", () => {
        const annotator = btn.dataset.annotator;
        if (annotator && confirm(`Reject ${annotator} and void their records?`)) {
          void dashboard.reject(batch, annotator).then(redraw);
        }
      });
    });
  };
  await dashboard.load(batch);
  redraw();
}

export function boot(): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const run = location.hash === "#review" ? bootReviewer : bootAnnotator;
  run(root).catch((err) => {
    root.innerHTML = renderError(err instanceof Error ? err.message : String(err));
  });
}

if (typeof document !== "undefined") {
  boot();
}
