import { ApiError, SessionApi, StateView, VariableView } from "./api";

export type Listener = () => void;

/** Client-side session state: the latest server view plus view-only state
 * (hover, variable scroll index, pending flag). Renders always read from
 * the newest accepted version; stale responses are dropped. */
export class ViewModel {
  view: StateView | null = null;
  hoveredCandidate: number | null = null;
  hoveredFeature: string | null = null;
  variableIndex = 0;
  pending = false;
  lastError: string | null = null;

  private listeners: Listener[] = [];

  constructor(private readonly api: SessionApi) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  /** Accept a server view unless something newer is already rendered. */
  applyServerView(view: StateView): void {
    if (this.view && this.view.session_id === view.session_id && view.version < this.view.version) {
      return; // stale response: a newer mutation already landed
    }
    this.view = view;
    this.variableIndex = 0;
    this.hoveredCandidate = null;
    this.hoveredFeature = null;
    this.lastError = null;
    this.emit();
  }

  currentVariable(): VariableView | null {
    if (!this.view || this.view.variables.length === 0) return null;
    const n = this.view.variables.length;
    return this.view.variables[((this.variableIndex % n) + n) % n];
  }

  cycleVariable(step: number): void {
    if (!this.view || this.view.variables.length === 0) return;
    this.variableIndex += step; // browsing alternatives never hits the server
    this.emit();
  }

  setHoveredCandidate(id: number | null): void {
    this.hoveredCandidate = id;
    this.emit();
  }

  setHoveredFeature(feature: string | null): void {
    this.hoveredFeature = feature;
    this.emit();
  }

  async start(request: Record<string, unknown>): Promise<void> {
    this.applyServerView(await this.api.createSession(request));
  }

  async decide(variableId: string, choice: "yes" | "no"): Promise<void> {
    await this.mutate((view) => this.api.decide(view.session_id, view.version, variableId, choice));
  }

  async selectCandidates(ids: number[]): Promise<void> {
    await this.mutate((view) => this.api.select(view.session_id, view.version, ids));
  }

  async undo(): Promise<void> {
    await this.mutate((view) => this.api.undo(view.session_id, view.version));
  }

  /** One mutation in flight at a time; on a version conflict, refresh. */
  private async mutate(run: (view: StateView) => Promise<StateView>): Promise<void> {
    if (!this.view || this.pending) return;
    this.pending = true;
    this.emit();
    try {
      this.applyServerView(await run(this.view));
    } catch (error) {
      if (error instanceof ApiError && error.code === "VERSION_CONFLICT") {
        this.applyServerView(await this.api.getSession(this.view.session_id));
      } else if (error instanceof ApiError) {
        this.lastError = `${error.code}: ${error.message}`;
      } else {
        this.lastError = String(error);
      }
    } finally {
      this.pending = false;
      this.emit();
    }
  }
}
