import type {
  EnabledBody,
  FlatNet,
  StateBody,
  TraceBody,
} from "./model.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client; every state change round-trips through here. */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  createSession(netJson: unknown): Promise<{ sessionId: string; state: StateBody }> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(netJson),
    });
  }

  createExampleSession(
    name: string,
    n: number,
  ): Promise<{ sessionId: string; state: StateBody }> {
    return this.request(`/api/examples/${name}/sessions?n=${n}`, {
      method: "POST",
    });
  }

  state(sid: string): Promise<StateBody> {
    return this.request(`/sessions/${sid}/state`);
  }

  enabled(sid: string): Promise<EnabledBody> {
    return this.request(`/sessions/${sid}/enabled`);
  }

  fire(
    sid: string,
    candidateIndex: number,
    stateHash: string,
  ): Promise<{ state: StateBody }> {
    return this.request(`/sessions/${sid}/fire`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ candidateIndex, stateHash }),
    });
  }

  undo(sid: string): Promise<StateBody> {
    return this.request(`/sessions/${sid}/undo`, { method: "POST" });
  }

  reset(sid: string): Promise<StateBody> {
    return this.request(`/sessions/${sid}/reset`, { method: "POST" });
  }

  flat(sid: string): Promise<FlatNet> {
    return this.request(`/sessions/${sid}/flat`);
  }

  trace(sid: string): Promise<TraceBody> {
    return this.request(`/sessions/${sid}/trace`);
  }
}
