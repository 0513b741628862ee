/**
 * Typed client for the annotation service wire API (schema version 1).
 *
 * All span offsets are byte offsets into the UTF-8 encoding of the
 * review text exactly as served by GET /review/{id}.
 */

export type TokenBoundary = [number, number];

export interface QuestionTaskPayload {
  version: number;
  kind: "question";
  task_id: string;
  review_id: string;
  topic: { opinion: string; aspect: string };
  instructions_version: string;
}

export interface SpanTaskPayload {
  version: number;
  kind: "span";
  task_id: string;
  review_id: string;
  question_text: string;
}

export type TaskPayload = QuestionTaskPayload | SpanTaskPayload;

export interface ReviewPayload {
  version: number;
  review_id: string;
  domain: string;
  text: string;
  tokens: TokenBoundary[];
}

export interface ProgressPayload {
  version: number;
  total: number;
  completed: number;
  per_domain: Record<string, { total: number; completed: number }>;
  active_workers: number;
  revision: number;
}

export interface WorkerPayload {
  version: number;
  worker_id: string;
  known: boolean;
  active: boolean;
  completed: number;
  gold_seen?: number;
  gold_correct?: number;
}

export interface AckPayload {
  version: number;
  status: "ok";
  revision: number;
}

export interface AnnotationBody {
  task_id: string;
  worker: string;
  question_subj_score: number;
  answer: { byte_start: number; byte_end: number } | null;
  answer_subj_score: number | null;
}

/** Service-side rejection; `code` mirrors the server error codes. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    readonly detail: string,
    readonly status: number,
  ) {
    super(`${code}: ${detail}`);
  }
}

export const NO_TASKS = "NO_TASKS" as const;

async function parseJson(response: Response): Promise<unknown> {
  try {
    return await response.json();
  } catch {
    throw new ApiError("BAD_RESPONSE", "service returned a non-JSON body", response.status);
  }
}

export class Api {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchImpl(`${this.base}${path}`, init);
    const body = (await parseJson(response)) as Record<string, unknown>;
    if (typeof body.error === "string") {
      throw new ApiError(body.error, String(body.detail ?? ""), response.status);
    }
    if (!response.ok) {
      throw new ApiError("HTTP_" + response.status, "unexpected failure", response.status);
    }
    return body;
  }

  async nextTask(worker: string): Promise<TaskPayload | typeof NO_TASKS> {
    const body = (await this.request(
      `/tasks/next?worker=${encodeURIComponent(worker)}`,
    )) as Record<string, unknown>;
    if (body.status === NO_TASKS) return NO_TASKS;
    return body as unknown as TaskPayload;
  }

  async review(reviewId: string): Promise<ReviewPayload> {
    return (await this.request(
      `/review/${encodeURIComponent(reviewId)}`,
    )) as ReviewPayload;
  }

  async submitQuestion(
    worker: string,
    taskId: string,
    questionText: string,
  ): Promise<AckPayload> {
    return (await this.request("/questions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        version: 1,
        worker,
        task_id: taskId,
        question_text: questionText,
      }),
    })) as AckPayload;
  }

  async submitAnnotation(body: AnnotationBody): Promise<AckPayload> {
    return (await this.request("/annotations", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ version: 1, ...body }),
    })) as AckPayload;
  }

  async progress(): Promise<ProgressPayload> {
    return (await this.request("/progress")) as ProgressPayload;
  }

  async worker(workerId: string): Promise<WorkerPayload> {
    return (await this.request(
      `/worker/${encodeURIComponent(workerId)}`,
    )) as WorkerPayload;
  }
}
