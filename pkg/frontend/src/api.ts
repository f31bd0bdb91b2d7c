// Typed client for the matching service JSON API. All shapes mirror the
// server's payloads verbatim; the UI never recomputes scores or ranks.

export type Candidate = {
  issue_iid: number;
  rank: number;
  similarity: number;
  percent: number;
  title: string | null;
  title_translated: string | null;
  url: string | null;
};

export type MatchResponse = {
  review_id: string | null;
  query_text: string | null;
  provider_id: string;
  k_requested: number;
  threshold_applied: number | null;
  filtered_out: boolean;
  translated_text: string | null;
  label: string | null;
  candidates: Candidate[];
};

export type MatchRequest = {
  text: string;
  lang?: string;
  provider?: string;
  k?: number;
  threshold?: number | null;
  translate_to?: string | null;
  classify_filter?: string[] | null;
};

export type TriageRequest = {
  review_text?: string;
  review_id?: string;
  decision: "linked" | "new_issue" | "dismissed";
  issue_iid?: number;
  decided_by?: string;
};

export type TriageResponse = {
  kind: "triage";
  review_id: string;
  decision: string;
  issue_iid?: number;
  decided_by: string;
  decided_at: string;
};

export type Stats = {
  issues: number;
  reviews: number;
  gold_links: number;
  embeddings: Record<string, Record<string, number>>;
  providers: string[];
  last_eval: { hit_rate_percent?: string; n_hits?: number; n_gold?: number; k?: number } | null;
};

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl = "",
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(0, "offline", `service unreachable: ${String(err)}`);
    }
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const code = body?.code ?? "error";
      const message = body?.message ?? `HTTP ${response.status}`;
      throw new ApiError(response.status, code, message);
    }
    return body as T;
  }

  match(req: MatchRequest): Promise<MatchResponse> {
    return this.request<MatchResponse>("/api/match", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  triage(req: TriageRequest): Promise<TriageResponse> {
    return this.request<TriageResponse>("/api/triage", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  stats(): Promise<Stats> {
    return this.request<Stats>("/api/stats");
  }
}
