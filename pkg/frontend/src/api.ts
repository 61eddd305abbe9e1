// Thin client over the /v1 API. All substance validation happens
// server-side; this module only moves JSON and surfaces server reasons.

import type {
  AskResponse,
  FiltersJson,
  HealthJson,
  TranscriptJson,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly reason: string,
  ) {
    super(`API error ${status}: ${reason}`);
  }

  get retryable(): boolean {
    return this.status === 503 || this.status >= 500;
  }
}

async function readReason(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    if (body && typeof body.error === "string") return body.error;
  } catch {
    // fall through to the status text
  }
  return response.statusText || "request failed";
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await readReason(response));
    }
    return response;
  }

  async createSession(): Promise<string> {
    const response = await this.request("/v1/sessions", { method: "POST" });
    const body = (await response.json()) as { session_id: string };
    return body.session_id;
  }

  async ask(
    sessionId: string,
    question: string,
    filters: FiltersJson | null,
  ): Promise<AskResponse> {
    const payload: { question: string; filters?: FiltersJson } = { question };
    if (filters !== null) payload.filters = filters;
    const response = await this.request(`/v1/sessions/${sessionId}/ask`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    return (await response.json()) as AskResponse;
  }

  async transcript(sessionId: string): Promise<TranscriptJson> {
    const response = await this.request(`/v1/sessions/${sessionId}/transcript`);
    return (await response.json()) as TranscriptJson;
  }

  /** Raw text from the export endpoint, byte-for-byte. */
  async exportTranscript(sessionId: string): Promise<string> {
    const response = await this.request(`/v1/sessions/${sessionId}/export`);
    return await response.text();
  }

  async health(): Promise<HealthJson> {
    const response = await this.request("/v1/health");
    return (await response.json()) as HealthJson;
  }
}

/** Client-side rule: one in-flight ask per session. */
export class AskGate {
  private readonly busy = new Set<string>();

  tryAcquire(sessionId: string): boolean {
    if (this.busy.has(sessionId)) return false;
    this.busy.add(sessionId);
    return true;
  }

  release(sessionId: string): void {
    this.busy.delete(sessionId);
  }

  isBusy(sessionId: string): boolean {
    return this.busy.has(sessionId);
  }
}
