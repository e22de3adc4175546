// Typed client for the annotation service REST API. The UI talks to the
// service through this module only; an optional observer sees every
// response body, which the tests use to prove blinded payloads never carry
// a model tag and that displayed numbers come from the service verbatim.

export interface TaskPayload {
  task_id: string;
  sample_id: string;
  question: string;
  generated: string;
  gold_answer?: string;
  model?: string;
}

export interface NextResponse {
  done: boolean;
  task?: TaskPayload;
  total: number;
  scored: number;
  pending: number;
}

export interface ProgressResponse {
  total: number;
  scored: number;
  pending: number;
}

export interface SubmitAck {
  ok: boolean;
  task_id: string;
  replaced: boolean;
}

export interface SessionInfo {
  session_id: string;
  total: number;
  blinded: boolean;
}

export interface ExportCard {
  sample_id: string;
  model: string;
  values: Record<string, number>;
}

export interface MeansRow {
  model: string;
  metric: string;
  mean: number | null;
  count: number;
}

export interface CorrelationCell {
  metric: string;
  dimension: string;
  model: string;
  spearman: number;
  kendall: number;
  n: number;
}

export interface OmittedCell {
  metric: string;
  dimension: string;
  model: string;
  reason: string;
  n: number;
}

export interface ReportPayload {
  means: MeansRow[];
  correlation: { cells: CorrelationCell[]; omitted: OmittedCell[] } | null;
}

export interface RatingsBody {
  [dimension: string]: number;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = "ApiError";
  }
}

export type PayloadObserver = (path: string, body: unknown) => void;
export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
    private readonly observer?: PayloadObserver,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`, 0);
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    this.observer?.(path, body);
    if (!response.ok) {
      const message =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : `request failed with status ${response.status}`;
      throw new ApiError(message, response.status);
    }
    return body as T;
  }

  listSessions(): Promise<{ sessions: SessionInfo[] }> {
    return this.request("/sessions");
  }

  createSession(options: { blinded?: boolean; seed?: number; show_gold?: boolean } = {}): Promise<{
    session_id: string;
    total: number;
  }> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(options),
    });
  }

  nextTask(sessionId: string, annotator: string, withGold = false): Promise<NextResponse> {
    const gold = withGold ? "&gold=true" : "";
    return this.request(
      `/sessions/${encodeURIComponent(sessionId)}/next?annotator=${encodeURIComponent(annotator)}${gold}`,
    );
  }

  submitAnnotation(
    sessionId: string,
    body: { task_id: string; annotator_id: string; ratings: RatingsBody; comment?: string },
  ): Promise<SubmitAck> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/annotations`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  progress(sessionId: string, annotator: string): Promise<ProgressResponse> {
    return this.request(
      `/sessions/${encodeURIComponent(sessionId)}/progress?annotator=${encodeURIComponent(annotator)}`,
    );
  }

  exportCards(sessionId: string): Promise<{ cards: ExportCard[] }> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/export`);
  }

  report(sessionId: string): Promise<ReportPayload> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/report`);
  }
}
