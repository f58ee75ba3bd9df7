/** Thin typed client over the HTTP API. The UI never generates anything itself. */

import type {
  ArticlePage,
  JargonResponse,
  JudgmentBody,
  PendingPair,
  Profile,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
    public hint?: Record<string, unknown>,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      // non-JSON error body; fall through with the status only
    }
    if (!resp.ok) {
      const detail =
        body && typeof body === "object" && "detail" in body
          ? String((body as { detail: unknown }).detail)
          : resp.statusText;
      const hint =
        body && typeof body === "object" && "hint" in body
          ? ((body as { hint: Record<string, unknown> }).hint ?? undefined)
          : undefined;
      throw new ApiError(resp.status, detail, hint);
    }
    return body as T;
  }

  getArticles(params: {
    category?: string;
    q?: string;
    page?: number;
    pageSize?: number;
  }): Promise<ArticlePage> {
    const search = new URLSearchParams();
    if (params.category) search.set("category", params.category);
    if (params.q) search.set("q", params.q);
    if (params.page) search.set("page", String(params.page));
    if (params.pageSize) search.set("page_size", String(params.pageSize));
    const qs = search.toString();
    return this.request<ArticlePage>(`/articles${qs ? `?${qs}` : ""}`);
  }

  getJargon(arxivId: string, readerId: string, method?: string): Promise<JargonResponse> {
    const search = new URLSearchParams({ reader: readerId });
    if (method) search.set("method", method);
    return this.request<JargonResponse>(
      `/articles/${encodeURIComponent(arxivId)}/jargon?${search.toString()}`,
    );
  }

  getProfiles(): Promise<Profile[]> {
    return this.request<Profile[]>("/profiles");
  }

  async getPendingPairs(readerId: string): Promise<PendingPair[]> {
    const body = await this.request<{ reader_id: string; pending: PendingPair[] }>(
      `/pairs?reader=${encodeURIComponent(readerId)}`,
    );
    return body.pending;
  }

  postJudgment(body: JudgmentBody): Promise<{ recorded: boolean }> {
    return this.request<{ recorded: boolean }>("/judgments", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
