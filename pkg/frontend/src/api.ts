/**
 * Typed client for the annotation service HTTP API.
 *
 * Every response carries `schema_version`; errors arrive as JSON bodies with
 * an `error` field and are surfaced as ApiError so callers can branch on the
 * HTTP status (401 expired token, 409 conflict, 400 validation).
 */

export interface LikertOption {
  value: number;
  label: string;
  description: string;
}

export interface InstancePayload {
  schema_version: string;
  instance_id: string;
  genre: string;
  sentence: string;
  target_start: number;
  target_end: number;
  surface: string;
  is_mwe: boolean;
  batch: number;
  options: LikertOption[];
}

export interface NextResponse {
  done?: boolean;
}

export interface SubmitAck {
  schema_version: string;
  accepted: boolean;
  instance_id: string;
  collected: number;
}

export interface BatchProgress {
  batch: number;
  instances: number;
  collected: number;
  closed: number;
}

export interface ProgressReport {
  schema_version: string;
  instances: number;
  records: number;
  annotators: number;
  released_batches: number[];
  batches: BatchProgress[];
}

export interface ReviewReport {
  schema_version: string;
  batch: number;
  records: number;
  flagged: Record<string, string[]>;
  label_histograms: Record<string, number[]>;
  frequency_correlation?: Record<string, number | null>;
  already_rejected: string[];
  voided_records?: Record<string, number>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.base}${path}`, init);
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : "network failure");
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, (body as { error?: string }).error ?? response.statusText);
    }
    return body as T;
  }

  register(name?: string): Promise<{ token: string }> {
    return this.request("/api/register", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ name: name ?? "" }),
    });
  }

  next(token: string): Promise<InstancePayload | NextResponse> {
    return this.request(`/api/next?token=${encodeURIComponent(token)}`);
  }

  submit(token: string, instanceId: string, likert: number, elapsedMs: number): Promise<SubmitAck> {
    return this.request("/api/submit", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        token,
        instance_id: instanceId,
        likert,
        elapsed_ms: elapsedMs,
      }),
    });
  }

  progress(): Promise<ProgressReport> {
    return this.request("/api/progress");
  }

  review(batch: number, options?: { force?: boolean; reject?: string[] }): Promise<ReviewReport> {
    return this.request(`/api/review/${batch}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ force: options?.force ?? false, reject: options?.reject ?? [] }),
    });
  }

  release(batch: number): Promise<{ released: number }> {
    return this.request(`/api/release/${batch}`, { method: "POST" });
  }

  async exportLog(): Promise<string> {
    const response = await this.fetchImpl(`${this.base}/api/export`);
    if (!response.ok) {
      throw new ApiError(response.status, response.statusText);
    }
    return response.text();
  }
}

export function isInstancePayload(p: InstancePayload | NextResponse): p is InstancePayload {
  return (p as InstancePayload).instance_id !== undefined;
}
