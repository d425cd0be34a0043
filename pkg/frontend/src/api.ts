// Typed client for /api/v1. The fetch implementation is injectable so the
// test suite can swap in a mock transport.

import {
  Alternatives,
  ApiError,
  ContinueReply,
  EditField,
  EditReply,
  EndReply,
  ExplanationDoc,
  Level,
  MentorReply,
  ScopeKind,
  ScoreDocument,
  SessionSummary,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "/api/v1",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body instanceof FormData) {
      init.body = body;
    } else if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const reply = await this.fetchImpl(this.baseUrl + path, init);
    if (!reply.ok) {
      let code = "HttpError";
      let message = `${reply.status}`;
      try {
        const payload = await reply.json();
        code = payload.error ?? code;
        message = payload.message ?? message;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(reply.status, code, message);
    }
    return (await reply.json()) as T;
  }

  createSession(seed?: number): Promise<SessionSummary> {
    return this.request("POST", "/sessions", seed === undefined ? {} : { seed });
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.request("GET", `/sessions/${id}`);
  }

  uploadAudio(id: string, file: File | Blob, name = "melody.wav"): Promise<SessionSummary> {
    const form = new FormData();
    form.append("file", file, name);
    return this.request("POST", `/sessions/${id}/audio`, form);
  }

  uploadMidi(id: string, file: File | Blob, name = "melody.mid"): Promise<SessionSummary> {
    const form = new FormData();
    form.append("file", file, name);
    return this.request("POST", `/sessions/${id}/midi`, form);
  }

  process(id: string, bpm?: number): Promise<SessionSummary> {
    return this.request("POST", `/sessions/${id}/process`, bpm === undefined ? {} : { bpm });
  }

  continuePhrase(id: string): Promise<ContinueReply> {
    return this.request("POST", `/sessions/${id}/continue`);
  }

  endPiece(id: string): Promise<EndReply> {
    return this.request("POST", `/sessions/${id}/end`);
  }

  getScore(id: string): Promise<ScoreDocument> {
    return this.request("GET", `/sessions/${id}/score`);
  }

  explanation(id: string, scope: ScopeKind, index: number | null, level: Level): Promise<ExplanationDoc> {
    const params = new URLSearchParams({ scope, level });
    if (index !== null) params.set("index", String(index));
    return this.request("GET", `/sessions/${id}/explanation?${params}`);
  }

  alternatives(id: string, measure: number): Promise<Alternatives> {
    return this.request("GET", `/sessions/${id}/measures/${measure}/alternatives`);
  }

  editMeasure(id: string, measure: number, field: EditField, value: string | number): Promise<EditReply> {
    return this.request("PATCH", `/sessions/${id}/measures/${measure}`, { field, value });
  }

  askMentor(query: string): Promise<MentorReply> {
    return this.request("POST", "/mentor", { query });
  }

  exportUrl(id: string): string {
    return `${this.baseUrl}/sessions/${id}/export`;
  }
}
