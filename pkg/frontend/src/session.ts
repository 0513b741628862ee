/**
 * Worker session: one in-flight task, no authoritative client state.
 *
 * Every view renders from what the service said last; QC standing in
 * particular is only ever copied from the server. A network failure
 * keeps the current task (the service re-serves it on reconnect) and
 * raises a retry banner instead of losing work.
 */

import {
  Api,
  ApiError,
  NO_TASKS,
  type AckPayload,
  type AnnotationBody,
  type TaskPayload,
  type WorkerPayload,
} from "./api.js";

export type Phase =
  | "loading"
  | "question"
  | "span"
  | "no_tasks"
  | "deactivated"
  | "offline";

export interface SessionState {
  workerId: string;
  phase: Phase;
  task: TaskPayload | null;
  completed: number;
  lastRevision: number | null;
  banner: string | null; // retry / rejection message
  worker: WorkerPayload | null;
}

function isNetworkFailure(err: unknown): boolean {
  return !(err instanceof ApiError);
}

export class Session {
  readonly state: SessionState;

  constructor(
    private readonly api: Api,
    workerId: string,
  ) {
    this.state = {
      workerId,
      phase: "loading",
      task: null,
      completed: 0,
      lastRevision: null,
      banner: null,
      worker: null,
    };
  }

  /** Pull worker standing and (unless deactivated) the next task. */
  async refresh(): Promise<SessionState> {
    try {
      const worker = await this.api.worker(this.state.workerId);
      this.state.worker = worker;
      this.state.completed = worker.completed;
      if (!worker.active) {
        this.state.phase = "deactivated";
        this.state.task = null;
        return this.state;
      }
      if (this.state.task === null) {
        const task = await this.api.nextTask(this.state.workerId);
        if (task === NO_TASKS) {
          this.state.phase = "no_tasks";
          this.state.task = null;
          return this.state;
        }
        this.state.task = task;
      }
      this.state.phase = this.state.task.kind === "question" ? "question" : "span";
      this.state.banner = null;
      return this.state;
    } catch (err) {
      this.handleError(err);
      return this.state;
    }
  }

  private handleError(err: unknown): void {
    if (err instanceof ApiError && err.code === "WORKER_DEACTIVATED") {
      this.state.phase = "deactivated";
      this.state.task = null;
      this.state.banner = null;
      return;
    }
    if (isNetworkFailure(err)) {
      // keep the task; the service will re-serve it after reconnect
      this.state.phase = "offline";
      this.state.banner = "service unreachable, retry when it is back";
      return;
    }
    const apiErr = err as ApiError;
    this.state.banner = `${apiErr.code}: ${apiErr.detail}`;
  }

  private acked(ack: AckPayload): SessionState {
    this.state.lastRevision = ack.revision;
    this.state.completed += 1;
    this.state.task = null;
    this.state.banner = null;
    this.state.phase = "loading";
    return this.state;
  }

  /** Local validation happens before any request is sent. */
  async submitQuestion(text: string): Promise<SessionState> {
    const task = this.state.task;
    if (task === null || task.kind !== "question") {
      throw new Error("no question task in flight");
    }
    if (!text.trim()) {
      this.state.banner = "question text must be non-empty";
      return this.state;
    }
    try {
      const ack = await this.api.submitQuestion(
        this.state.workerId,
        task.task_id,
        text.trim(),
      );
      return this.acked(ack);
    } catch (err) {
      this.handleError(err);
      return this.state;
    }
  }

  async submitAnnotation(
    answer: { byte_start: number; byte_end: number } | null,
    questionScore: number,
    answerScore: number | null,
  ): Promise<SessionState> {
    const task = this.state.task;
    if (task === null || task.kind !== "span") {
      throw new Error("no span task in flight");
    }
    const body: AnnotationBody = {
      task_id: task.task_id,
      worker: this.state.workerId,
      question_subj_score: questionScore,
      answer,
      answer_subj_score: answer === null ? null : answerScore,
    };
    try {
      const ack = await this.api.submitAnnotation(body);
      return this.acked(ack);
    } catch (err) {
      this.handleError(err);
      return this.state;
    }
  }
}
