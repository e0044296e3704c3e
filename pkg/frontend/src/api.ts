/** Typed client for the annotation service HTTP API. */

export interface AlternativeCard {
  id: number;
  x: number;
  y: number;
  label: string;
}

export interface ServiceInfo {
  n_alternatives: number;
  embedding_dim: number;
  alternatives: AlternativeCard[];
}

export interface SessionCreateRequest {
  embedding_mode?: "fixed" | "per_request";
  embedding?: number[];
  mutation_rate?: number;
}

export interface SessionCreated {
  session_id: string;
  embedding_mode: string;
  n_alternatives: number;
  lottery: number[];
  answer_count: number;
}

export interface QueryResponse {
  session_id: string;
  a1: AlternativeCard;
  a2: AlternativeCard;
  lottery: number[];
  answer_count: number;
}

export interface AnswerResponse {
  session_id: string;
  lottery: number[];
  answer_count: number;
}

export interface SessionState {
  session_id: string;
  lottery: number[];
  answer_count: number;
  history_length: number;
  pending: boolean;
}

export interface SessionClosed {
  session_id: string;
  answer_count: number;
  transcript_path: string | null;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApaClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  info(): Promise<ServiceInfo> {
    return this.request<ServiceInfo>("/info");
  }

  createSession(body: SessionCreateRequest = {}): Promise<SessionCreated> {
    return this.request<SessionCreated>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getQuery(sessionId: string): Promise<QueryResponse> {
    return this.request<QueryResponse>(`/sessions/${sessionId}/query`);
  }

  postAnswer(sessionId: string, winner: number): Promise<AnswerResponse> {
    return this.request<AnswerResponse>(`/sessions/${sessionId}/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ winner }),
    });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request<SessionState>(`/sessions/${sessionId}/state`);
  }

  closeSession(sessionId: string): Promise<SessionClosed> {
    return this.request<SessionClosed>(`/sessions/${sessionId}`, {
      method: "DELETE",
    });
  }
}
