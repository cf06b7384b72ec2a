// Session state machine for the two-page annotation flow.
//
// The controller keeps two layers of answers: acked answers the server has
// confirmed (seeded from the task payload, extended after each successful
// submit) and pending selections held locally until acknowledged. Pending
// selections survive refreshes via an injected storage, so a failed submit
// never loses work.

import {
  ApiClient,
  ApiError,
  Progress,
  QuestionSpec,
  TaskPayload,
} from "./api";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export type Page = 1 | 2;

export type Phase = "login" | "working" | "done";

const PAGE1_QUESTIONS = ["relevance", "plausibility"];
const DIRECTION = "reference_direction";
const AGREEMENT = "factual_agreement";

function answerKey(reviewId: string, slotId: string | null, question: string): string {
  return `${reviewId}::${slotId ?? ""}::${question}`;
}

/** Persisted map of selections the server has not acknowledged yet. */
export class AnswerCache {
  private values: Record<string, number | string>;

  constructor(
    private readonly storage: StorageLike,
    private readonly key: string = "annotation-pending",
  ) {
    this.values = {};
    const raw = storage.getItem(key);
    if (raw !== null) {
      try {
        this.values = JSON.parse(raw) as Record<string, number | string>;
      } catch {
        storage.removeItem(key);
      }
    }
  }

  get(reviewId: string, slotId: string | null, question: string): number | string | undefined {
    return this.values[answerKey(reviewId, slotId, question)];
  }

  set(reviewId: string, slotId: string | null, question: string, value: number | string): void {
    this.values[answerKey(reviewId, slotId, question)] = value;
    this.flush();
  }

  remove(reviewId: string, slotId: string | null, question: string): void {
    delete this.values[answerKey(reviewId, slotId, question)];
    this.flush();
  }

  private flush(): void {
    this.storage.setItem(this.key, JSON.stringify(this.values));
  }
}

/** Persisted session credentials so a refresh resumes without re-login. */
export class SessionStore {
  constructor(
    private readonly storage: StorageLike,
    private readonly key: string = "annotation-session",
  ) {}

  load(): { annotatorId: string; token: string } | null {
    const raw = this.storage.getItem(this.key);
    if (raw === null) return null;
    try {
      const parsed = JSON.parse(raw) as { annotatorId?: string; token?: string };
      if (typeof parsed.annotatorId === "string" && typeof parsed.token === "string") {
        return { annotatorId: parsed.annotatorId, token: parsed.token };
      }
    } catch {
      // corrupt entry, treat as logged out
    }
    this.storage.removeItem(this.key);
    return null;
  }

  save(annotatorId: string, token: string): void {
    this.storage.setItem(this.key, JSON.stringify({ annotatorId, token }));
  }

  clear(): void {
    this.storage.removeItem(this.key);
  }
}

function ackedMap(task: TaskPayload): Map<string, number | string> {
  const acked = new Map<string, number | string>();
  for (const item of task.answered) {
    acked.set(answerKey(task.review_id, item.slot_id, item.question), item.value);
  }
  return acked;
}

function slotPage1Done(acked: Map<string, number | string>, task: TaskPayload, slotId: string): boolean {
  return PAGE1_QUESTIONS.every((q) =>
    acked.has(answerKey(task.review_id, slotId, q)),
  );
}

function slotDone(acked: Map<string, number | string>, task: TaskPayload, slotId: string): boolean {
  return (
    slotPage1Done(acked, task, slotId) &&
    acked.has(answerKey(task.review_id, slotId, AGREEMENT))
  );
}

/**
 * Work out where in the review the annotator left off: the first slot that
 * is not fully judged, on page 2 when its first page is already acked. When
 * every slot is done but the review-level direction is missing, land on the
 * last slot's second page where that control lives.
 */
export function deriveResume(task: TaskPayload): { slotIndex: number; page: Page } {
  const acked = ackedMap(task);
  for (let i = 0; i < task.slots.length; i += 1) {
    const slot = task.slots[i];
    if (slot === undefined) continue;
    if (!slotDone(acked, task, slot.slot_id)) {
      return { slotIndex: i, page: slotPage1Done(acked, task, slot.slot_id) ? 2 : 1 };
    }
  }
  return { slotIndex: Math.max(0, task.slots.length - 1), page: 2 };
}

export interface ScaleOption {
  value: number | string;
  label: string;
  selected: boolean;
}

export interface QuestionView {
  question: string;
  label: string;
  options: ScaleOption[];
}

export interface TaskViewModel {
  phase: Phase;
  error: string | null;
  busy: boolean;
  // login
  rosterHint?: string;
  // working
  topicTitle?: string;
  summary?: string;
  referenceSummary?: string;
  page?: Page;
  slotNumber?: number;
  slotCount?: number;
  questions?: QuestionView[];
  canSubmit?: boolean;
  progress?: Progress;
}

export class SessionController {
  phase: Phase = "login";
  error: string | null = null;
  busy = false;

  private token: string | null = null;
  private task: TaskPayload | null = null;
  private acked: Map<string, number | string> = new Map();
  private doneProgress: Progress | null = null;
  slotIndex = 0;
  page: Page = 1;

  constructor(
    private readonly api: ApiClient,
    private readonly cache: AnswerCache,
    private readonly session: SessionStore,
  ) {}

  /** Restore a stored session if one exists; stale tokens drop to login. */
  async resume(): Promise<void> {
    const stored = this.session.load();
    if (stored === null) return;
    this.token = stored.token;
    try {
      await this.loadNext();
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.session.clear();
        this.token = null;
        this.phase = "login";
        return;
      }
      throw err;
    }
  }

  async login(annotatorId: string): Promise<void> {
    this.error = null;
    this.busy = true;
    try {
      const token = await this.api.createSession(annotatorId.trim());
      this.token = token;
      this.session.save(annotatorId.trim(), token);
      await this.loadNext();
    } catch (err) {
      this.error = describeError(err);
    } finally {
      this.busy = false;
    }
  }

  private async loadNext(): Promise<void> {
    if (this.token === null) throw new Error("not logged in");
    const next = await this.api.nextTask(this.token);
    if (next.done) {
      this.phase = "done";
      this.task = null;
      this.doneProgress = next.progress;
      return;
    }
    this.task = next;
    this.acked = ackedMap(next);
    const resume = deriveResume(next);
    this.slotIndex = resume.slotIndex;
    this.page = resume.page;
    this.phase = "working";
  }

  private currentSlotId(): string {
    const task = this.task;
    if (task === null) throw new Error("no active task");
    const slot = task.slots[this.slotIndex];
    if (slot === undefined) throw new Error("slot index out of range");
    return slot.slot_id;
  }

  private isAcked(slotId: string | null, question: string): boolean {
    const task = this.task;
    if (task === null) return false;
    return this.acked.has(answerKey(task.review_id, slotId, question));
  }

  private selection(slotId: string | null, question: string): number | string | undefined {
    const task = this.task;
    if (task === null) return undefined;
    const acked = this.acked.get(answerKey(task.review_id, slotId, question));
    if (acked !== undefined) return acked;
    return this.cache.get(task.review_id, slotId, question);
  }

  /** Record a radio selection locally; nothing is sent until submit. */
  select(question: string, rawValue: string): void {
    const task = this.task;
    if (task === null) return;
    const slotId = question === DIRECTION ? null : this.currentSlotId();
    if (this.isAcked(slotId, question)) return;
    const spec = this.findQuestion(question);
    const value = spec?.scale !== undefined ? Number(rawValue) : rawValue;
    this.cache.set(task.review_id, slotId, question, value);
  }

  private findQuestion(question: string): QuestionSpec | undefined {
    const task = this.task;
    if (task === null) return undefined;
    return [...task.page1_questions, ...task.page2_questions].find(
      (q) => q.question === question,
    );
  }

  private pendingJudgments(): Array<{ slotId: string | null; question: string; value: number | string }> {
    const task = this.task;
    if (task === null) return [];
    const slotId = this.currentSlotId();
    const wanted: Array<{ slotId: string | null; question: string }> =
      this.page === 1
        ? PAGE1_QUESTIONS.map((q) => ({ slotId, question: q }))
        : [
            { slotId: null, question: DIRECTION },
            { slotId, question: AGREEMENT },
          ];
    const out: Array<{ slotId: string | null; question: string; value: number | string }> = [];
    for (const item of wanted) {
      if (this.isAcked(item.slotId, item.question)) continue;
      const value = this.cache.get(task.review_id, item.slotId, item.question);
      if (value !== undefined) {
        out.push({ slotId: item.slotId, question: item.question, value });
      }
    }
    return out;
  }

  private pageComplete(): boolean {
    const task = this.task;
    if (task === null) return false;
    const slotId = this.currentSlotId();
    const required: Array<{ slotId: string | null; question: string }> =
      this.page === 1
        ? PAGE1_QUESTIONS.map((q) => ({ slotId, question: q }))
        : [
            { slotId: null, question: DIRECTION },
            { slotId, question: AGREEMENT },
          ];
    return required.every(
      (item) => this.selection(item.slotId, item.question) !== undefined,
    );
  }

  /**
   * Send every unacknowledged answer for the current page, then advance.
   * Answers are acked one at a time, so a failure mid-batch keeps the
   * remainder cached and a retry resends only what is still missing.
   */
  async submitPage(): Promise<void> {
    const task = this.task;
    if (task === null || this.token === null) return;
    if (!this.pageComplete() || this.busy) return;
    this.error = null;
    this.busy = true;
    try {
      for (const item of this.pendingJudgments()) {
        await this.api.submitJudgment({
          token: this.token,
          review_id: task.review_id,
          question: item.question,
          value: item.value,
          ...(item.slotId !== null ? { slot_id: item.slotId } : {}),
        });
        this.acked.set(
          answerKey(task.review_id, item.slotId, item.question),
          item.value,
        );
        this.cache.remove(task.review_id, item.slotId, item.question);
      }
      await this.advance();
    } catch (err) {
      this.error = describeError(err);
    } finally {
      this.busy = false;
    }
  }

  private async advance(): Promise<void> {
    const task = this.task;
    if (task === null) return;
    if (this.page === 1) {
      this.page = 2;
      return;
    }
    if (this.slotIndex + 1 < task.slots.length) {
      this.slotIndex += 1;
      this.page = 1;
      return;
    }
    await this.loadNext();
  }

  private questionViews(): QuestionView[] {
    const task = this.task;
    if (task === null) return [];
    const specs = this.page === 1 ? task.page1_questions : task.page2_questions;
    const views: QuestionView[] = [];
    for (const spec of specs) {
      const slotId = spec.level === "review" ? null : this.currentSlotId();
      // review-level direction is asked once; hide it after it is acked
      if (spec.level === "review" && this.isAcked(null, spec.question)) continue;
      const selected = this.selection(slotId, spec.question);
      const values: Array<number | string> = spec.scale ?? spec.choices ?? [];
      views.push({
        question: spec.question,
        label: spec.question,
        options: values.map((value) => ({
          value,
          label: String(value),
          selected: selected === value,
        })),
      });
    }
    return views;
  }

  viewModel(): TaskViewModel {
    if (this.phase === "login") {
      return { phase: "login", error: this.error, busy: this.busy };
    }
    if (this.phase === "done") {
      return {
        phase: "done",
        error: null,
        busy: false,
        progress: this.doneProgress ?? undefined,
      };
    }
    const task = this.task;
    if (task === null) throw new Error("working phase without a task");
    const slot = task.slots[this.slotIndex];
    if (slot === undefined) throw new Error("slot index out of range");
    return {
      phase: "working",
      error: this.error,
      busy: this.busy,
      topicTitle: task.topic_title,
      summary: slot.summary,
      // the reference is deliberately withheld until the second page
      ...(this.page === 2 ? { referenceSummary: task.reference_summary } : {}),
      page: this.page,
      slotNumber: this.slotIndex + 1,
      slotCount: task.slots.length,
      questions: this.questionViews(),
      canSubmit: this.pageComplete() && !this.busy,
      progress: task.progress,
    };
  }
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  if (err instanceof Error) return `could not reach the server (${err.message})`;
  return "could not reach the server";
}
