import { ApiClient, ApiError } from "./api.js";
import type {
  CandidateBody,
  FlatNet,
  StateBody,
  TraceBody,
} from "./model.js";

export interface ViewState {
  phase: "empty" | "ready";
  sessionId: string | null;
  flat: FlatNet | null;
  state: StateBody | null;
  candidates: CandidateBody[];
  stateHash: string | null;
  selected: number | null;
  trace: TraceBody | null;
  toasts: string[];
}

/** Controller of one simulation session.
 *
 * Every mutation round-trips through the service: the view is refreshed
 * from the responses, never predicted.  Firing always carries the state
 * hash the candidates were listed under; a 409 answer means the view was
 * stale and triggers a silent refresh instead of an error.
 */
export class AppCore {
  view: ViewState = {
    phase: "empty",
    sessionId: null,
    flat: null,
    state: null,
    candidates: [],
    stateHash: null,
    selected: null,
    trace: null,
    toasts: [],
  };

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (view: ViewState) => void = () => {},
  ) {}

  private emit() {
    this.onChange(this.view);
  }

  private toast(message: string) {
    this.view.toasts = [...this.view.toasts, message].slice(-4);
    this.emit();
  }

  dismissToasts() {
    this.view.toasts = [];
    this.emit();
  }

  async loadExample(name: string, n: number): Promise<void> {
    await this.guard(async () => {
      const created = await this.api.createExampleSession(name, n);
      await this.bootstrap(created.sessionId);
    });
  }

  async loadNetJson(doc: unknown): Promise<void> {
    await this.guard(async () => {
      const created = await this.api.createSession(doc);
      await this.bootstrap(created.sessionId);
    });
  }

  private async bootstrap(sessionId: string) {
    this.view.sessionId = sessionId;
    this.view.flat = await this.api.flat(sessionId);
    this.view.phase = "ready";
    await this.refresh();
  }

  /** Pull state, candidates and trace; keeps the hash guard coherent. */
  async refresh(): Promise<void> {
    const sid = this.view.sessionId;
    if (!sid) return;
    const [state, enabled, trace] = await Promise.all([
      this.api.state(sid),
      this.api.enabled(sid),
      this.api.trace(sid),
    ]);
    this.view.state = state;
    this.view.candidates = enabled.candidates;
    this.view.stateHash = enabled.stateHash;
    this.view.trace = trace;
    if (
      this.view.selected !== null &&
      this.view.selected >= enabled.candidates.length
    ) {
      this.view.selected = null;
    }
    this.emit();
  }

  select(index: number | null) {
    this.view.selected = index;
    this.emit();
  }

  selectedCandidate(): CandidateBody | null {
    if (this.view.selected === null) return null;
    return this.view.candidates[this.view.selected] ?? null;
  }

  /** Fire a candidate under the hash guard; stale views refresh silently. */
  async fire(index: number): Promise<boolean> {
    const sid = this.view.sessionId;
    const hash = this.view.stateHash;
    if (!sid || hash === null) return false;
    try {
      await this.api.fire(sid, index, hash);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh();
        return false;
      }
      throw err;
    }
    this.view.selected = null;
    await this.refresh();
    return true;
  }

  async fireSelected(): Promise<boolean> {
    if (this.view.selected === null) return false;
    return this.fire(this.view.selected);
  }

  async undo(): Promise<void> {
    await this.guard(async () => {
      const sid = this.view.sessionId;
      if (!sid) return;
      await this.api.undo(sid);
      await this.refresh();
    });
  }

  async reset(): Promise<void> {
    await this.guard(async () => {
      const sid = this.view.sessionId;
      if (!sid) return;
      await this.api.reset(sid);
      await this.refresh();
    });
  }

  async exportTrace(): Promise<TraceBody | null> {
    const sid = this.view.sessionId;
    if (!sid) return null;
    return this.api.trace(sid);
  }

  private async guard(action: () => Promise<void>) {
    try {
      await action();
    } catch (err) {
      if (err instanceof ApiError) {
        this.toast(`service error ${err.status}: ${err.message}`);
        return;
      }
      throw err;
    }
  }
}
