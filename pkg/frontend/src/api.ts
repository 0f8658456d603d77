// Typed fetch client for the session service. The dashboard talks to the
// documented endpoints and nothing else; every rendered value originates in
// one of these responses.

import type {
  ComponentPage,
  CreateSessionRequest,
  GroupRow,
  SessionListing,
  SessionView,
  StepResponse,
  SweepResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === "string") detail = body.detail;
      else if (body) detail = JSON.stringify(body.detail ?? body);
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(public base: string) {
    this.base = base.replace(/\/+$/, "");
  }

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  private post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    return fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    }).then((r) => asJson<T>(r));
  }

  health(): Promise<{ status: string; version: string; sessions: number }> {
    return fetch(this.url("/health")).then((r) => asJson(r));
  }

  predefined(): Promise<{ predefined: string[] }> {
    return fetch(this.url("/scenarios")).then((r) => asJson(r));
  }

  createSession(req: CreateSessionRequest): Promise<SessionView> {
    return this.post("/sessions", req);
  }

  getSession(id: string): Promise<SessionView> {
    return fetch(this.url(`/sessions/${id}`)).then((r) => asJson(r));
  }

  listSessions(): Promise<SessionListing> {
    return fetch(this.url("/sessions")).then((r) => asJson(r));
  }

  components(id: string, offset: number, limit: number): Promise<ComponentPage> {
    return fetch(this.url(`/sessions/${id}/components?offset=${offset}&limit=${limit}`)).then(
      (r) => asJson(r),
    );
  }

  groups(id: string): Promise<{ session_id: string; groups: GroupRow[] }> {
    return fetch(this.url(`/sessions/${id}/groups`)).then((r) => asJson(r));
  }

  step(id: string, actions: number[], annotation: string | null): Promise<StepResponse> {
    return this.post(`/sessions/${id}/step`, { actions, annotation });
  }

  branch(id: string): Promise<SessionView> {
    return this.post(`/sessions/${id}/branch`, {});
  }

  sweep(
    id: string,
    req: { policy?: string; plan?: number[][]; n_seeds: number; horizon?: number },
    signal?: AbortSignal,
  ): Promise<SweepResponse> {
    return this.post(`/sessions/${id}/sweep`, req, signal);
  }

  exportLog(id: string): Promise<string> {
    return fetch(this.url(`/sessions/${id}/log`)).then(async (r) => {
      if (!r.ok) throw new ApiError(r.status, r.statusText);
      return r.text();
    });
  }

  deleteSession(id: string): Promise<void> {
    return fetch(this.url(`/sessions/${id}`), { method: "DELETE" }).then(async (r) => {
      await asJson(r);
    });
  }
}
