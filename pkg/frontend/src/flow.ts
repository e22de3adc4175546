// Annotation flow state machine, kept DOM-free so it is testable headless
// and reusable against a live service. The server owns task assignment;
// the flow only fetches the next task, collects four ratings, and submits
// exactly the integers the annotator selected.

import { ApiClient, ApiError, NextResponse, TaskPayload } from "./api.js";

export const DIMENSIONS = ["relevance", "readability", "truthfulness", "usability"] as const;
export type Dimension = (typeof DIMENSIONS)[number];

export type Phase = "loading" | "rating" | "done" | "failed";

export interface FlowState {
  phase: Phase;
  task: TaskPayload | null;
  ratings: Partial<Record<Dimension, number>>;
  comment: string;
  scored: number;
  total: number;
  error: string | null;
}

export class AnnotationFlow {
  state: FlowState = {
    phase: "loading",
    task: null,
    ratings: {},
    comment: "",
    scored: 0,
    total: 0,
    error: null,
  };

  constructor(
    private readonly client: ApiClient,
    private readonly sessionId: string,
    private readonly annotator: string,
  ) {}

  async start(): Promise<FlowState> {
    return this.advance();
  }

  private applyNext(next: NextResponse): FlowState {
    this.state.scored = next.scored;
    this.state.total = next.total;
    if (next.done) {
      this.state.phase = "done";
      this.state.task = null;
    } else {
      this.state.phase = "rating";
      this.state.task = next.task ?? null;
      this.state.ratings = {};
      this.state.comment = "";
    }
    return this.state;
  }

  private async advance(): Promise<FlowState> {
    this.state.phase = "loading";
    try {
      const next = await this.client.nextTask(this.sessionId, this.annotator);
      this.state.error = null;
      return this.applyNext(next);
    } catch (err) {
      this.state.phase = "failed";
      this.state.error = err instanceof Error ? err.message : String(err);
      return this.state;
    }
  }

  setRating(dimension: Dimension, value: number): void {
    if (!Number.isInteger(value) || value < 1 || value > 5) {
      throw new Error(`rating must be an integer 1..5, got ${value}`);
    }
    this.state.ratings[dimension] = value;
  }

  setComment(comment: string): void {
    this.state.comment = comment;
  }

  canSubmit(): boolean {
    return (
      this.state.phase === "rating" &&
      DIMENSIONS.every((dimension) => this.state.ratings[dimension] !== undefined)
    );
  }

  // Submit the four selected integers untouched, then advance to the next
  // task. A rejection surfaces inline and keeps the entered ratings.
  async submit(): Promise<FlowState> {
    const task = this.state.task;
    if (!task || !this.canSubmit()) {
      throw new Error("submit requires a task and all four ratings");
    }
    const ratings: Record<string, number> = {};
    for (const dimension of DIMENSIONS) {
      ratings[dimension] = this.state.ratings[dimension]!;
    }
    try {
      await this.client.submitAnnotation(this.sessionId, {
        task_id: task.task_id,
        annotator_id: this.annotator,
        ratings,
        comment: this.state.comment,
      });
    } catch (err) {
      this.state.error = err instanceof ApiError ? err.message : String(err);
      return this.state; // ratings retained for correction
    }
    return this.advance();
  }
}
