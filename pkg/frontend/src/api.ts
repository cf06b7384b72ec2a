// Thin typed client for the annotation service. The fetch implementation is
// injectable so tests can run against a scripted server.

export interface Progress {
  completed_reviews: number;
  total_reviews: number;
}

export interface SlotPayload {
  slot_id: string;
  summary: string;
}

export interface QuestionSpec {
  question: string;
  level: "slot" | "review";
  scale?: number[];
  choices?: string[];
}

export interface AnsweredItem {
  slot_id: string | null;
  question: string;
  value: number | string;
}

export interface TaskPayload {
  done: false;
  review_id: string;
  topic_title: string;
  reference_summary: string;
  slots: SlotPayload[];
  page1_questions: QuestionSpec[];
  page2_questions: QuestionSpec[];
  answered: AnsweredItem[];
  progress: Progress;
}

export interface DonePayload {
  done: true;
  progress: Progress;
}

export type NextTask = TaskPayload | DonePayload;

export interface JudgmentRequest {
  token: string;
  review_id: string;
  question: string;
  value: number | string;
  slot_id?: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    if (body && typeof body.error === "string") return body.error;
  } catch {
    // non-JSON error body; fall through to the generic message
  }
  return `request failed with status ${response.status}`;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(await errorMessage(response), response.status);
    }
    return (await response.json()) as T;
  }

  async createSession(annotatorId: string): Promise<string> {
    const body = await this.request<{ token: string }>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator_id: annotatorId }),
    });
    return body.token;
  }

  async nextTask(token: string): Promise<NextTask> {
    return this.request<NextTask>(
      `/tasks/next?token=${encodeURIComponent(token)}`,
    );
  }

  async submitJudgment(judgment: JudgmentRequest): Promise<void> {
    await this.request<{ status: string }>("/judgments", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(judgment),
    });
  }
}
