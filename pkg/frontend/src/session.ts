/**
 * Annotator session state machine, kept free of DOM concerns so the whole
 * flow is testable headlessly.
 *
 * The elapsed timer starts the moment an instance becomes renderable and is
 * read at submit time from the same monotonic-enough clock, so the reported
 * figure tracks the render-to-submit wall time. Submission is idempotent per
 * instance: once a POST is in flight (or acknowledged) for an instance id,
 * further submit() calls are no-ops, which is what absorbs double clicks.
 */

import { ApiClient, ApiError, InstancePayload, isInstancePayload } from "./api.js";

export type SessionState =
  | { kind: "loading" }
  | { kind: "annotating"; payload: InstancePayload; selected: number | null; startedAt: number }
  | { kind: "done" }
  | { kind: "login" }
  | { kind: "error"; message: string };

export interface SessionEvents {
  onChange?: (state: SessionState) => void;
  onNotice?: (message: string) => void;
}

export class AnnotationSession {
  state: SessionState = { kind: "loading" };
  submittedCount = 0;

  private readonly now: () => number;
  private readonly settled = new Set<string>(); // instance ids submitted or skipped
  private inFlight: string | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly token: string,
    readonly events: SessionEvents = {},
    now?: () => number,
  ) {
    this.now = now ?? (() => Date.now());
  }

  private transition(state: SessionState): void {
    this.state = state;
    this.events.onChange?.(state);
  }

  /** Fetch the next open instance and start its timer. */
  async loadNext(): Promise<SessionState> {
    this.transition({ kind: "loading" });
    try {
      const payload = await this.client.next(this.token);
      if (isInstancePayload(payload)) {
        this.transition({
          kind: "annotating",
          payload,
          selected: null,
          startedAt: this.now(),
        });
      } else {
        this.transition({ kind: "done" });
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.transition({ kind: "login" });
      } else {
        this.transition({
          kind: "error",
          message: err instanceof Error ? err.message : String(err),
        });
      }
    }
    return this.state;
  }

  /** Record the chosen Likert value; submission stays disabled until one is set. */
  select(value: number): void {
    if (this.state.kind !== "annotating") {
      return;
    }
    const known = this.state.payload.options.some((o) => o.value === value);
    if (!known) {
      throw new Error(`unknown option value ${value}`);
    }
    this.transition({ ...this.state, selected: value });
  }

  get canSubmit(): boolean {
    return (
      this.state.kind === "annotating" &&
      this.state.selected !== null &&
      this.inFlight === null
    );
  }

  elapsedMs(): number {
    if (this.state.kind !== "annotating") {
      return 0;
    }
    return Math.max(0, this.now() - this.state.startedAt);
  }

  /**
   * POST the judgment and advance. Returns true when the flow advanced,
   * either because the record was accepted or because a 409 (duplicate or
   * just-closed instance) was consciously skipped without retry.
   */
  async submit(): Promise<boolean> {
    if (this.state.kind !== "annotating" || this.state.selected === null) {
      return false;
    }
    const { payload, selected } = this.state;
    if (this.inFlight !== null || this.settled.has(payload.instance_id)) {
      return false; // double-click or re-entry: one record per instance
    }
    this.inFlight = payload.instance_id;
    try {
      await this.client.submit(this.token, payload.instance_id, selected, this.elapsedMs());
      this.settled.add(payload.instance_id);
      this.submittedCount += 1;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.settled.add(payload.instance_id);
        this.events.onNotice?.("Already recorded elsewhere; skipping forward.");
      } else if (err instanceof ApiError && err.status === 401) {
        this.inFlight = null;
        this.transition({ kind: "login" });
        return false;
      } else {
        this.inFlight = null;
        this.transition({
          kind: "error",
          message: err instanceof Error ? err.message : String(err),
        });
        return false;
      }
    } finally {
      if (this.inFlight === payload.instance_id) {
        this.inFlight = null;
      }
    }
    await this.loadNext();
    return true;
  }
}
