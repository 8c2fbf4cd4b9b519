import type { Fetcher, SuggestionRow } from "./api.js";

export interface SuggestionView {
  /** Current content of the input field. */
  input: string;
  /** Selected engine ("lm" or "mpc"). */
  model: string;
  /** Rows exactly as served, in rank order; never reordered client-side. */
  rows: SuggestionRow[];
  /** Prefix echoed by the server for the rows on display (null when empty). */
  echoedPrefix: string | null;
  latencyMs: number | null;
  error: string | null;
  pending: boolean;
}

export interface SessionOptions {
  fetcher: Fetcher;
  onRender: (view: SuggestionView) => void;
  debounceMs?: number;
  numCandidates?: number;
}

/**
 * Typeahead state machine. Keystrokes are debounced; at most one request is
 * in flight (older ones are aborted); a response is applied only when its
 * echoed prefix still equals the input field, so a slow response for an old
 * prefix can never overwrite fresher suggestions.
 */
export class SuggestionSession {
  private readonly fetcher: Fetcher;
  private readonly onRender: (view: SuggestionView) => void;
  private readonly debounceMs: number;
  private readonly numCandidates: number;

  private input = "";
  private model = "lm";
  private rows: SuggestionRow[] = [];
  private echoedPrefix: string | null = null;
  private latencyMs: number | null = null;
  private error: string | null = null;

  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight: AbortController | null = null;

  constructor(options: SessionOptions) {
    this.fetcher = options.fetcher;
    this.onRender = options.onRender;
    this.debounceMs = options.debounceMs ?? 50;
    this.numCandidates = options.numCandidates ?? 10;
  }

  getView(): SuggestionView {
    return {
      input: this.input,
      model: this.model,
      rows: this.rows,
      echoedPrefix: this.echoedPrefix,
      latencyMs: this.latencyMs,
      error: this.error,
      pending: this.timer !== null || this.inflight !== null,
    };
  }

  /** Keystroke entry point: debounce, then query for the current text. */
  setInput(text: string): void {
    this.input = text;
    if (!text) {
      this.cancelAll();
      this.clearPanel();
      this.render();
      return;
    }
    this.schedule();
    this.render();
  }

  /** Switching the engine re-queries the current prefix immediately. */
  setModel(model: string): void {
    if (model === this.model) return;
    this.model = model;
    if (this.input) {
      this.fire();
    }
    this.render();
  }

  /** Accept a suggestion: it becomes the input and is queried afresh. */
  selectRow(rank: number): void {
    const row = this.rows.find((r) => r.rank === rank);
    if (!row) return;
    this.input = row.query;
    this.fire();
    this.render();
  }

  private schedule(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fire();
    }, this.debounceMs);
  }

  private fire(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const requested = this.input;
    this.fetcher(requested, this.model, this.numCandidates, controller.signal).then(
      (resp) => {
        if (this.inflight === controller) this.inflight = null;
        // Staleness rule: render only when the echoed prefix still matches
        // the input field exactly.
        if (resp.prefix !== this.input) return;
        this.rows = resp.candidates;
        this.echoedPrefix = resp.prefix;
        this.latencyMs = resp.latency_ms;
        this.error = null;
        this.render();
      },
      (err: unknown) => {
        if (this.inflight === controller) this.inflight = null;
        if (isAbort(err)) return; // superseded on purpose
        if (requested !== this.input) return; // stale failure
        this.clearPanel();
        this.error = err instanceof Error ? err.message : String(err);
        this.render();
      },
    );
  }

  private cancelAll(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.inflight?.abort();
    this.inflight = null;
  }

  private clearPanel(): void {
    this.rows = [];
    this.echoedPrefix = null;
    this.latencyMs = null;
    this.error = null;
  }

  private render(): void {
    this.onRender(this.getView());
  }
}

function isAbort(err: unknown): boolean {
  return err instanceof DOMException && err.name === "AbortError";
}
