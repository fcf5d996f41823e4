// Typed client for the /api/v1 endpoints. The fetch implementation is
// injected so tests can run without a browser or a server.

export interface RuleInfo {
  rule: string;
  polarity: "pass" | "fail";
  kind: "literal" | "regex";
  provenance: "initial" | "annotator";
  by: string | null;
  comment: string | null;
}

export interface WarningCard {
  run_id: string;
  system: string;
  item_id: string;
  source: string;
  phenomenon: string;
  category: string;
  output: string;
  raw_output: string;
  note: string | null;
  matched_pass_rules: number[];
  matched_fail_rules: number[];
  rules: RuleInfo[];
}

export interface Progress {
  total_items: number;
  items_with_warnings: number;
  resolved_items: number;
  valid_items: number;
  pending: number;
}

export interface QueueResponse {
  warnings: WarningCard[];
  progress: Progress;
}

export interface PreviewMatch {
  run_id: string;
  system: string;
  output: string;
  matched: boolean;
  verdict_with_rule: string;
  verdict_now: string;
}

export interface PreviewResponse {
  rule: string;
  polarity: string;
  matches: PreviewMatch[];
}

export interface RejudgeStatus {
  running: boolean;
  report: {
    to_version: number;
    changed: unknown[];
    unchanged_manual: number;
  } | null;
  error: string | null;
  progress: Progress;
}

export interface QueueFilters {
  system?: string;
  category?: string;
  phenomenon?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorFrom(response: Response): Promise<ApiError> {
  let code = `HTTP${response.status}`;
  let message = response.statusText;
  try {
    const body = await response.json();
    if (body && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    } else if (body && body.detail) {
      message = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly base = "",
    private token: string | null = null,
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    if (this.token && method !== "GET") {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new NetworkError(err instanceof Error ? err.message : String(err));
    }
    if (!response.ok) {
      throw await errorFrom(response);
    }
    return (await response.json()) as T;
  }

  warnings(filters: QueueFilters = {}): Promise<QueueResponse> {
    const params = new URLSearchParams();
    if (filters.system) params.set("system", filters.system);
    if (filters.category) params.set("category", filters.category);
    if (filters.phenomenon) params.set("phenomenon", filters.phenomenon);
    const query = params.toString();
    return this.request<QueueResponse>("GET", `/api/v1/warnings${query ? "?" + query : ""}`);
  }

  progress(): Promise<Progress> {
    return this.request<Progress>("GET", "/api/v1/progress");
  }

  submitVerdict(
    card: Pick<WarningCard, "run_id" | "item_id">,
    verdict: "pass" | "fail",
    annotator: string,
    rationale?: string,
  ): Promise<{ progress: Progress }> {
    return this.request("POST", "/api/v1/judgments", {
      run_id: card.run_id,
      item_id: card.item_id,
      verdict,
      annotator,
      rationale: rationale ?? null,
    });
  }

  addRule(
    itemId: string,
    rule: string,
    annotator: string,
    comment?: string,
  ): Promise<{ item_id: string; rules: string[]; suite_version: number }> {
    return this.request("POST", "/api/v1/rules", {
      item_id: itemId,
      rule,
      annotator,
      comment: comment ?? null,
    });
  }

  previewRule(itemId: string, rule: string, runId?: string): Promise<PreviewResponse> {
    return this.request("POST", "/api/v1/rules/preview", {
      item_id: itemId,
      rule,
      run_id: runId ?? null,
    });
  }

  startRejudge(): Promise<{ status: string }> {
    return this.request("POST", "/api/v1/rejudge", {});
  }

  rejudgeStatus(): Promise<RejudgeStatus> {
    return this.request<RejudgeStatus>("GET", "/api/v1/rejudge/status");
  }
}
