/**
 * DOM views: question writing, span labeling, progress.
 *
 * The span view renders each server token as a clickable element;
 * click picks a start, shift-click extends. Selection therefore always
 * snaps to server token boundaries and free-character selection is
 * impossible by construction. The "can't answer" toggle clears the
 * selection and disables the answer score, matching the service's
 * annotation invariant.
 */

import type { QuestionTaskPayload, ReviewPayload, SpanTaskPayload, WorkerPayload } from "./api.js";
import { TokenizedReview, normalizeSelection, type Selection } from "./tokens.js";

export interface QuestionSubmission {
  questionText: string;
}

export interface SpanSubmission {
  answer: { byte_start: number; byte_end: number } | null;
  questionScore: number;
  answerScore: number | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function scoreSelect(label: string, className: string): HTMLSelectElement {
  const select = el("select", className);
  const placeholder = el("option", undefined, label);
  placeholder.value = "";
  select.appendChild(placeholder);
  for (let score = 1; score <= 5; score++) {
    const option = el("option", undefined, String(score));
    option.value = String(score);
    select.appendChild(option);
  }
  return select;
}

export function renderBanner(message: string | null): HTMLElement {
  const banner = el("div", "banner");
  if (message) {
    banner.textContent = message;
    banner.classList.add("visible");
  }
  return banner;
}

export function renderQuestionView(
  task: QuestionTaskPayload,
  review: ReviewPayload,
  onSubmit: (submission: QuestionSubmission) => void,
): HTMLElement {
  const root = el("section", "question-view");
  root.appendChild(
    el(
      "p",
      "instructions",
      "Write a question about the topic below that this review can answer.",
    ),
  );
  const topic = el("p", "topic");
  topic.textContent = `Topic: ${task.topic.opinion} — ${task.topic.aspect}`;
  root.appendChild(topic);
  root.appendChild(el("blockquote", "review-text", review.text));

  const input = el("textarea", "question-input");
  input.rows = 2;
  root.appendChild(input);

  const error = el("p", "local-error");
  root.appendChild(error);

  const submit = el("button", "submit", "Submit question");
  submit.addEventListener("click", () => {
    if (!input.value.trim()) {
      error.textContent = "Please write a question first.";
      return; // no request leaves the client
    }
    error.textContent = "";
    onSubmit({ questionText: input.value.trim() });
  });
  root.appendChild(submit);
  return root;
}

export function renderSpanView(
  task: SpanTaskPayload,
  review: ReviewPayload,
  onSubmit: (submission: SpanSubmission) => void,
): HTMLElement {
  const tokenized = new TokenizedReview(review.text, review.tokens);
  let selection: Selection | null = null;
  let anchor: number | null = null;

  const root = el("section", "span-view");
  root.appendChild(el("p", "question", task.question_text));
  root.appendChild(
    el(
      "p",
      "instructions",
      "Highlight the shortest answer span, or mark the question unanswerable.",
    ),
  );

  const reviewBox = el("div", "review-tokens");
  reviewBox.appendChild(el("span", "gap", tokenized.gapText(-1)));
  const tokenEls: HTMLElement[] = [];
  for (let i = 0; i < tokenized.tokenCount; i++) {
    const tokenEl = el("span", "token", tokenized.tokenText(i));
    tokenEl.dataset.index = String(i);
    tokenEl.addEventListener("click", (event) => {
      if (unanswerable.checked) return;
      const mouse = event as MouseEvent;
      if (mouse.shiftKey && anchor !== null) {
        selection = normalizeSelection(anchor, i);
      } else {
        anchor = i;
        selection = { startToken: i, endToken: i };
      }
      refresh();
    });
    tokenEls.push(tokenEl);
    reviewBox.appendChild(tokenEl);
    reviewBox.appendChild(el("span", "gap", tokenized.gapText(i)));
  }
  root.appendChild(reviewBox);

  const preview = el("p", "selection-preview");
  root.appendChild(preview);

  const unanswerable = el("input") as HTMLInputElement;
  unanswerable.type = "checkbox";
  unanswerable.className = "unanswerable";
  const unanswerableLabel = el("label", "unanswerable-label", " Cannot be answered from this review");
  unanswerableLabel.prepend(unanswerable);
  root.appendChild(unanswerableLabel);

  const questionScore = scoreSelect("Question subjectivity (1-5)", "question-score");
  const answerScore = scoreSelect("Answer subjectivity (1-5)", "answer-score");
  root.appendChild(questionScore);
  root.appendChild(answerScore);

  const error = el("p", "local-error");
  root.appendChild(error);
  const submit = el("button", "submit", "Submit annotation");
  submit.disabled = true;
  root.appendChild(submit);

  function refresh(): void {
    for (const tokenEl of tokenEls) tokenEl.classList.remove("selected");
    if (unanswerable.checked) {
      selection = null;
      anchor = null;
    }
    if (selection) {
      for (let i = selection.startToken; i <= selection.endToken; i++) {
        tokenEls[i].classList.add("selected");
      }
      preview.textContent = tokenized.selectionText(selection);
    } else {
      preview.textContent = "";
    }
    answerScore.disabled = unanswerable.checked;
    if (unanswerable.checked) answerScore.value = "";
    const haveAnswer = unanswerable.checked || selection !== null;
    const haveScores =
      questionScore.value !== "" && (unanswerable.checked || answerScore.value !== "");
    submit.disabled = !(haveAnswer && haveScores);
  }

  unanswerable.addEventListener("change", refresh);
  questionScore.addEventListener("change", refresh);
  answerScore.addEventListener("change", refresh);

  submit.addEventListener("click", () => {
    if (submit.disabled) return;
    if (unanswerable.checked) {
      onSubmit({
        answer: null,
        questionScore: Number(questionScore.value),
        answerScore: null,
      });
      return;
    }
    if (!selection) {
      error.textContent = "Select an answer span first.";
      return;
    }
    const { byteStart, byteEnd } = tokenized.selectionBytes(selection);
    onSubmit({
      answer: { byte_start: byteStart, byte_end: byteEnd },
      questionScore: Number(questionScore.value),
      answerScore: Number(answerScore.value),
    });
  });

  refresh();
  return root;
}

export function renderProgressView(worker: WorkerPayload | null): HTMLElement {
  const root = el("section", "progress-view");
  const completed = worker?.completed ?? 0;
  root.appendChild(el("p", "completed", `Tasks completed: ${completed}`));
  // QC standing comes straight from the server; the client never
  // computes or second-guesses it
  if (worker && !worker.active) {
    root.appendChild(
      el(
        "p",
        "terminal-notice",
        "Your session has ended: gold-task accuracy fell below the required level. No further tasks will be served.",
      ),
    );
  } else {
    root.appendChild(el("p", "status", "Status: active"));
  }
  return root;
}
