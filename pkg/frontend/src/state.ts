import { askQuestion, RequestFailed, sendFeedback } from "./api.js";
import type { AppConfig, Candidate } from "./types.js";

export type Status = "idle" | "loading" | "done" | "error";

export interface ViewState {
  query: string;
  status: Status;
  /** Rendered exactly in server order. */
  candidates: Candidate[];
  historyId: string | null;
  error: string | null;
  errorRetriable: boolean;
  /** True once feedback was sent for the current result set. */
  feedbackSent: boolean;
  feedbackConfirmed: "helpful" | "unhelpful" | null;
  staleResult: boolean;
}

export function initialState(): ViewState {
  return {
    query: "",
    status: "idle",
    candidates: [],
    historyId: null,
    error: null,
    errorRetriable: false,
    feedbackSent: false,
    feedbackConfirmed: null,
    staleResult: false,
  };
}

export function canSubmit(state: ViewState): boolean {
  return state.query.trim().length > 0 && state.status !== "loading";
}

export function canSendFeedback(state: ViewState): boolean {
  return state.historyId !== null && !state.feedbackSent && state.status === "done";
}

type Listener = (state: ViewState) => void;

/** Holds the view state and runs the ask/feedback flows against the API. */
export class Store {
  private state: ViewState = initialState();
  private listeners: Listener[] = [];
  private inflight: AbortController | null = null;

  constructor(private readonly config: AppConfig) {}

  getState(): ViewState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  setQuery(query: string): void {
    this.update({ query });
  }

  /**
   * Submit the current query. Empty queries are refused; a submission that
   * races an in-flight request cancels it (the view additionally disables
   * the control while loading).
   */
  async submit(): Promise<void> {
    if (this.state.query.trim().length === 0) return;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.update({
      status: "loading",
      error: null,
      errorRetriable: false,
      staleResult: false,
    });
    try {
      const resp = await askQuestion(
        this.config.baseUrl,
        this.state.query.trim(),
        this.config.topK,
        controller.signal,
      );
      if (this.inflight !== controller) return; // superseded
      this.inflight = null;
      this.update({
        status: "done",
        candidates: resp.candidates,
        historyId: resp.history_id,
        feedbackSent: false,
        feedbackConfirmed: null,
      });
    } catch (err) {
      if ((err as Error).name === "AbortError") return;
      if (this.inflight !== controller) return;
      this.inflight = null;
      const failed = err instanceof RequestFailed ? err : null;
      this.update({
        status: "error",
        error: failed?.message ?? String(err),
        errorRetriable: failed?.retriable ?? true,
      });
    }
  }

  async feedback(verdict: "helpful" | "unhelpful"): Promise<void> {
    if (!canSendFeedback(this.state) || this.state.historyId === null) return;
    try {
      await sendFeedback(this.config.baseUrl, this.state.historyId, verdict);
      this.update({ feedbackSent: true, feedbackConfirmed: verdict });
    } catch (err) {
      if (err instanceof RequestFailed && err.status === 404) {
        // the server no longer knows this history id (e.g. restart)
        this.update({ staleResult: true, feedbackSent: true });
      } else {
        this.update({
          error: err instanceof Error ? err.message : String(err),
          errorRetriable: true,
        });
      }
    }
  }
}
