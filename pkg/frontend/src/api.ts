// Typed client for the session service. Every cockpit action goes through
// one of these calls; nothing is computed locally.

export interface NewSessionRequest {
  mode: "simulated" | "interactive";
  csv_text?: string;
  schema?: Record<string, unknown>;
  synthetic?: Record<string, unknown>;
  pre_pollution?: Record<string, unknown>;
  algorithm: string;
  hyperparameters?: Record<string, unknown>;
  search?: boolean;
  cost?: string | Record<string, unknown>;
  budget: number;
  seed?: number;
  scenario?: { kind: string; error_type?: string };
  combos?: number;
}

export interface NewSessionResponse {
  session_id: string;
  dirty_f1: number;
  version: number;
  terminal: string | null;
}

export interface Candidate {
  feature: string;
  error_type: string;
  score: number | null;
  predicted_f1: number;
  uncertainty: number;
  cost: number;
  priority_cells: { train?: number[]; test?: number[] };
}

export interface Recommendation extends Candidate {
  fallback: boolean;
  alternatives: Candidate[];
  current_f1: number;
  remaining_budget: number;
  version: number;
}

export interface CleanedCell {
  row: number;
  value: number | string | null;
}

export interface CleaningRequest {
  feature?: string;
  error_type?: string;
  cleaned_cells?: CleanedCell[];
  mark_fully_clean?: boolean;
  version?: number;
}

export interface Attempt {
  feature: number;
  error_type: string;
  predicted_f1: number;
  uncertainty: number;
  score: number | null;
  cost: number;
  from_buffer: boolean;
  fallback: boolean;
  cells_cleaned: number;
  actual_f1: number;
  accepted: boolean;
}

export interface CleaningResponse {
  accepted: boolean | null;
  new_f1: number;
  spent: number;
  remaining_budget: number;
  trajectory: [number, number][];
  version: number;
  terminal: string | null;
  attempts?: Attempt[];
  notice?: string;
}

export interface IterationRecord {
  index: number;
  accepted: boolean;
  duration_s: number;
  attempts: Attempt[];
}

export interface History {
  trajectory: [number, number][];
  ledger: {
    total: number;
    spent: number;
    entries: [number, number, string, number, boolean][];
  };
  discrepancy_log: Record<string, [number, number][]>;
  iterations: IterationRecord[];
  current_f1: number;
  terminal: string | null;
  version: number;
  features: { name: string; kind: string; fully_clean: boolean }[];
  model: { algorithm: string; seed: number };
  budget: number;
  audit: Record<string, unknown>[];
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class SessionApi {
  constructor(private baseUrl: string,
              private fetchFn: typeof fetch = fetch) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail = (body as { detail?: string }).detail ?? "request failed";
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  health(): Promise<{ ok: boolean }> {
    return this.request("/healthz");
  }

  createSession(req: NewSessionRequest): Promise<NewSessionResponse> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  recommendation(sessionId: string): Promise<Recommendation> {
    return this.request(`/sessions/${sessionId}/recommendation`);
  }

  cleaning(sessionId: string, req: CleaningRequest): Promise<CleaningResponse> {
    return this.request(`/sessions/${sessionId}/cleaning`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  history(sessionId: string): Promise<History> {
    return this.request(`/sessions/${sessionId}/history`);
  }
}
