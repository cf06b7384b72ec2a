// Pure renderers: view model in, HTML string out. No DOM access here so the
// whole surface can be tested as plain strings.

import { Progress } from "./api";
import { COPY } from "./copy";
import { TaskViewModel, QuestionView } from "./state";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function errorBox(error: string | null): string {
  if (error === null) return "";
  return `<div class="error" role="alert">${escapeHtml(error)} ${escapeHtml(COPY.retryHint)}</div>`;
}

export function renderLogin(vm: TaskViewModel): string {
  return `
<section class="login">
  <h1>${escapeHtml(COPY.appTitle)}</h1>
  <p>${escapeHtml(COPY.loginPrompt)}</p>
  ${errorBox(vm.error)}
  <form data-action="login">
    <input type="text" name="annotator_id" autocomplete="off" required />
    <button type="submit" ${vm.busy ? "disabled" : ""}>${escapeHtml(COPY.loginButton)}</button>
  </form>
</section>`;
}

function anchorFor(question: string, value: number | string): string {
  const entry = COPY.questions[question as keyof typeof COPY.questions];
  if (entry === undefined) return String(value);
  const anchor = (entry.anchors as Record<string | number, string>)[value];
  return anchor === undefined ? String(value) : anchor;
}

function labelFor(question: string): string {
  const entry = COPY.questions[question as keyof typeof COPY.questions];
  return entry === undefined ? question : entry.label;
}

function renderQuestion(view: QuestionView): string {
  const options = view.options
    .map((opt) => {
      const id = `${view.question}-${opt.value}`;
      return `
    <label class="option" for="${escapeHtml(id)}">
      <input type="radio" id="${escapeHtml(id)}" name="${escapeHtml(view.question)}"
             value="${escapeHtml(String(opt.value))}" ${opt.selected ? "checked" : ""} />
      <span class="option-value">${escapeHtml(String(opt.value))}</span>
      <span class="option-anchor">${escapeHtml(anchorFor(view.question, opt.value))}</span>
    </label>`;
    })
    .join("");
  return `
<fieldset class="question" data-question="${escapeHtml(view.question)}">
  <legend>${escapeHtml(labelFor(view.question))}</legend>
  ${options}
</fieldset>`;
}

function renderProgress(progress: Progress | undefined): string {
  if (progress === undefined) return "";
  return `<span class="progress">${escapeHtml(
    COPY.progress(progress.completed_reviews, progress.total_reviews),
  )}</span>`;
}

export function renderTask(vm: TaskViewModel): string {
  const page = vm.page ?? 1;
  const heading = page === 1 ? COPY.page1Heading : COPY.page2Heading;
  const reference =
    page === 2 && vm.referenceSummary !== undefined
      ? `
  <section class="reference">
    <h3>${escapeHtml(COPY.referenceHeading)}</h3>
    <p>${escapeHtml(vm.referenceSummary)}</p>
  </section>`
      : "";
  const questions = (vm.questions ?? []).map(renderQuestion).join("");
  const button = page === 1 ? COPY.advanceButton : COPY.submitButton;
  return `
<section class="task">
  <header>
    <h1>${escapeHtml(vm.topicTitle ?? "")}</h1>
    <div class="meta">
      <span class="slot-indicator">${escapeHtml(
        COPY.slotIndicator(vm.slotNumber ?? 1, vm.slotCount ?? 1),
      )}</span>
      <span class="page-indicator">${escapeHtml(COPY.pageIndicator(page))}</span>
      ${renderProgress(vm.progress)}
    </div>
  </header>
  <section class="summary">
    <p>${escapeHtml(vm.summary ?? "")}</p>
  </section>
  ${reference}
  ${errorBox(vm.error)}
  <form data-action="submit-page">
    ${questions}
    <button type="submit" ${vm.canSubmit === true ? "" : "disabled"}>${escapeHtml(button)}</button>
  </form>
</section>`;
}

export function renderDone(vm: TaskViewModel): string {
  return `
<section class="done">
  <h1>${escapeHtml(COPY.doneHeading)}</h1>
  <p>${escapeHtml(COPY.doneBody)}</p>
  ${renderProgress(vm.progress)}
</section>`;
}

export function render(vm: TaskViewModel): string {
  if (vm.phase === "login") return renderLogin(vm);
  if (vm.phase === "done") return renderDone(vm);
  return renderTask(vm);
}
