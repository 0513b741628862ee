/** Application entry point: drives the session loop against the service. */

import { Api, NO_TASKS } from "./api.js";
import { Session } from "./session.js";
import {
  renderBanner,
  renderProgressView,
  renderQuestionView,
  renderSpanView,
} from "./views.js";

function mount(root: HTMLElement, ...nodes: HTMLElement[]): void {
  root.replaceChildren(...nodes);
}

export async function boot(root: HTMLElement, api: Api, workerId: string): Promise<void> {
  const session = new Session(api, workerId);

  async function tick(): Promise<void> {
    const state = await session.refresh();
    const banner = renderBanner(state.banner);
    const progress = renderProgressView(state.worker);

    if (state.phase === "deactivated") {
      mount(root, banner, progress);
      return;
    }
    if (state.phase === "no_tasks") {
      const done = document.createElement("p");
      done.className = "no-tasks";
      done.textContent = "No tasks left. Thank you!";
      mount(root, banner, done, progress);
      return;
    }
    if (state.phase === "offline") {
      const retry = document.createElement("button");
      retry.className = "retry";
      retry.textContent = "Retry";
      retry.addEventListener("click", () => void tick());
      mount(root, banner, retry, progress);
      return;
    }
    const task = state.task;
    if (task === null) {
      void tick();
      return;
    }
    const review = await api.review(task.review_id);
    if (task.kind === "question") {
      const view = renderQuestionView(task, review, (submission) => {
        void session.submitQuestion(submission.questionText).then(() => tick());
      });
      mount(root, banner, view, progress);
    } else {
      const view = renderSpanView(task, review, (submission) => {
        void session
          .submitAnnotation(
            submission.answer,
            submission.questionScore,
            submission.answerScore,
          )
          .then(() => tick());
      });
      mount(root, banner, view, progress);
    }
  }

  await tick();
}

declare global {
  interface Window {
    reviewqaBoot?: typeof boot;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.reviewqaBoot = boot;
  const root = document.getElementById("app");
  if (root) {
    const params = new URLSearchParams(window.location.search);
    const workerId = params.get("worker") ?? `worker-${Math.random().toString(36).slice(2, 8)}`;
    void boot(root, new Api(""), workerId);
  }
}

export { NO_TASKS };
