/** Typed client for the plsq session service. All mutations carry the
 * version they were issued against; a 409 means the view is stale. */

export interface Glyph {
  rows: number;
  cols: number;
}

export interface CandidateView {
  id: number;
  sql: string;
  features: string[];
  glyph: Glyph;
  x: number;
  y: number;
  cluster: number;
  weight: number;
}

export interface ImplicitFeature {
  feature: string;
  probability: number;
}

export interface VariableView {
  id: string;
  features: string[];
  implicit: ImplicitFeature[];
  example_candidate_id: number;
  ig_bits: number;
  lift: number;
  source_cluster: number | null;
}

export interface PredictedFeature {
  id: string;
  feature: string;
  probability: number;
  determined: boolean;
}

export interface TableView {
  columns: string[];
  rows: unknown[][];
}

export interface StateView {
  session_id: string;
  version: number;
  utterance: string;
  turn: number;
  terminal: boolean;
  candidates: CandidateView[];
  variables: VariableView[];
  predicted_features: PredictedFeature[];
  predicted_output: TableView;
}

export interface TaskInfo {
  id: string;
  utterance: string;
  ambiguity_type: string | null;
  n_golds: number;
  has_cache: boolean;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parse<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const code = typeof body.code === "string" ? body.code : "UNKNOWN";
    const message = typeof body.message === "string" ? body.message : response.statusText;
    throw new ApiError(response.status, code, message);
  }
  return body as T;
}

export class SessionApi {
  constructor(private readonly base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async listTasks(): Promise<TaskInfo[]> {
    const body = await parse<{ tasks: TaskInfo[] }>(await fetch(this.url("/tasks")));
    return body.tasks;
  }

  createSession(request: Record<string, unknown>): Promise<StateView> {
    return this.post("/sessions", request);
  }

  async getSession(sessionId: string): Promise<StateView> {
    return parse<StateView>(await fetch(this.url(`/sessions/${sessionId}`)));
  }

  decide(sessionId: string, version: number, variableId: string, choice: "yes" | "no"): Promise<StateView> {
    return this.post(`/sessions/${sessionId}/decision`, {
      version,
      variable_id: variableId,
      choice,
    });
  }

  select(sessionId: string, version: number, candidateIds: number[]): Promise<StateView> {
    return this.post(`/sessions/${sessionId}/select`, {
      version,
      candidate_ids: candidateIds,
    });
  }

  undo(sessionId: string, version: number): Promise<StateView> {
    return this.post(`/sessions/${sessionId}/undo`, { version });
  }

  private async post(path: string, payload: unknown): Promise<StateView> {
    const response = await fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    return parse<StateView>(response);
  }
}
