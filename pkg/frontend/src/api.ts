// Thin fetch wrapper around the arena API. Errors never throw: callers get a
// discriminated result so 409/422 can surface as inline notices.

import type {
  Action,
  ActionResponse,
  CreateSessionResponse,
  FeedbackResponse,
  LogResponse,
  SessionStateResponse,
} from "./types.js";

export interface ApiFailure {
  ok: false;
  status: number;
  code: string;
  message: string;
}

export type ApiResult<T> = { ok: true; data: T } | ApiFailure;

export type FetchLike = (url: string, init?: RequestInit) => Promise<{
  status: number;
  json(): Promise<unknown>;
}>;

export class ArenaApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<ApiResult<T>> {
    let response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: body !== undefined ? { "Content-Type": "application/json" } : undefined,
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      return { ok: false, status: 0, code: "network", message: String(err) };
    }
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      // non-JSON body: keep payload null
    }
    if (response.status >= 200 && response.status < 300) {
      return { ok: true, data: payload as T };
    }
    const error = (payload ?? {}) as { code?: string; message?: string };
    return {
      ok: false,
      status: response.status,
      code: error.code ?? `http-${response.status}`,
      message: error.message ?? `request failed with status ${response.status}`,
    };
  }

  createSession(opponent: string, thinking: boolean, seed?: number) {
    const body: Record<string, unknown> = { opponent, thinking };
    if (seed !== undefined) body.seed = seed;
    return this.request<CreateSessionResponse>("POST", "/api/sessions", body);
  }

  getSession(sessionId: string) {
    return this.request<SessionStateResponse>("GET", `/api/sessions/${sessionId}`);
  }

  postAction(sessionId: string, action: Action) {
    return this.request<ActionResponse>("POST", `/api/sessions/${sessionId}/actions`, action);
  }

  getLog(sessionId: string) {
    return this.request<LogResponse>("GET", `/api/sessions/${sessionId}/log`);
  }

  postFeedback(sessionId: string, rating: number) {
    return this.request<FeedbackResponse>("POST", `/api/sessions/${sessionId}/feedback`, { rating });
  }
}
