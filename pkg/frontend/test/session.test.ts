import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { Fetcher, SuggestResponse } from "../src/api.js";
import { SuggestionSession, SuggestionView } from "../src/session.js";

interface Pending {
  prefix: string;
  model: string;
  resolve: (resp: SuggestResponse) => void;
  reject: (err: unknown) => void;
  aborted: boolean;
}

/** Fetcher whose responses are resolved manually, in any order. */
function manualFetcher() {
  const pending: Pending[] = [];
  const fetcher: Fetcher = (prefix, model, _n, signal) =>
    new Promise<SuggestResponse>((resolve, reject) => {
      const entry: Pending = { prefix, model, resolve, reject, aborted: false };
      signal.addEventListener("abort", () => {
        entry.aborted = true;
        reject(new DOMException("aborted", "AbortError"));
      });
      pending.push(entry);
    });
  const respond = (entry: Pending, queries: string[]) =>
    entry.resolve({
      prefix: entry.prefix,
      model: entry.model,
      candidates: queries.map((q, i) => ({ query: q, score: -i, rank: i + 1 })),
      latency_ms: 1.5,
    });
  return { fetcher, pending, respond };
}

function makeSession(fetcher: Fetcher) {
  const frames: SuggestionView[] = [];
  const session = new SuggestionSession({
    fetcher,
    onRender: (view) => frames.push(view),
    debounceMs: 50,
    numCandidates: 5,
  });
  return { session, frames };
}

async function flushMicrotasks() {
  await Promise.resolve();
  await Promise.resolve();
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("debouncing", () => {
  it("coalesces rapid keystrokes into one request for the final text", async () => {
    const { fetcher, pending } = manualFetcher();
    const { session } = makeSession(fetcher);
    session.setInput("r");
    vi.advanceTimersByTime(20);
    session.setInput("re");
    vi.advanceTimersByTime(20);
    session.setInput("res");
    vi.advanceTimersByTime(50);
    await flushMicrotasks();
    expect(pending.map((p) => p.prefix)).toEqual(["res"]);
  });

  it("sends nothing for empty input and clears the panel", async () => {
    const { fetcher, pending, respond } = manualFetcher();
    const { session, frames } = makeSession(fetcher);
    session.setInput("re");
    vi.advanceTimersByTime(50);
    respond(pending[0], ["red"]);
    await flushMicrotasks();
    expect(frames.at(-1)!.rows).toHaveLength(1);

    session.setInput("");
    await flushMicrotasks();
    const last = frames.at(-1)!;
    expect(last.rows).toHaveLength(0);
    expect(last.echoedPrefix).toBeNull();
    vi.advanceTimersByTime(200);
    expect(pending).toHaveLength(1); // no new request was issued
  });
});

describe("staleness", () => {
  it("never renders a list whose echoed prefix differs from the input", async () => {
    const { fetcher, pending, respond } = manualFetcher();
    const { session, frames } = makeSession(fetcher);

    // Scripted keystrokes with slow, out-of-order responses.
    session.setInput("r");
    vi.advanceTimersByTime(50); // request for "r" goes out
    session.setInput("re");
    // The "r" response arrives while the debounce for "re" is still pending.
    respond(pending[0], ["round", "rabbit"]);
    await flushMicrotasks();
    vi.advanceTimersByTime(50); // request for "re"
    session.setInput("res");
    vi.advanceTimersByTime(50); // aborts "re", requests "res"
    respond(pending[2], ["restaurants", "resorts"]);
    await flushMicrotasks();

    for (const frame of frames) {
      if (frame.rows.length > 0) {
        expect(frame.echoedPrefix).toBe(frame.input);
      }
    }
    const last = frames.at(-1)!;
    expect(last.input).toBe("res");
    expect(last.rows.map((r) => r.query)).toEqual(["restaurants", "resorts"]);
    expect(pending[1].aborted).toBe(true);
  });

  it("drops a stale response that was not aborted", async () => {
    const { fetcher, pending, respond } = manualFetcher();
    const { session, frames } = makeSession(fetcher);
    session.setInput("r");
    vi.advanceTimersByTime(50);
    session.setInput("re"); // debounce pending; "r" still in flight
    const before = frames.length;
    respond(pending[0], ["round"]);
    await flushMicrotasks();
    expect(frames.length).toBe(before); // nothing rendered for "r"
  });

  it("keeps at most one request in flight", async () => {
    const { fetcher, pending } = manualFetcher();
    const { session } = makeSession(fetcher);
    session.setInput("a");
    vi.advanceTimersByTime(50);
    session.setInput("ab");
    vi.advanceTimersByTime(50);
    session.setInput("abc");
    vi.advanceTimersByTime(50);
    await flushMicrotasks();
    const alive = pending.filter((p) => !p.aborted);
    expect(alive.map((p) => p.prefix)).toEqual(["abc"]);
  });
});

describe("model toggle", () => {
  it("re-queries the current prefix with the new engine immediately", async () => {
    const { fetcher, pending, respond } = manualFetcher();
    const { session, frames } = makeSession(fetcher);
    session.setInput("na");
    vi.advanceTimersByTime(50);
    respond(pending[0], ["nation"]);
    await flushMicrotasks();

    session.setModel("mpc");
    await flushMicrotasks();
    expect(pending).toHaveLength(2);
    expect(pending[1]).toMatchObject({ prefix: "na", model: "mpc" });
    respond(pending[1], ["naples"]);
    await flushMicrotasks();
    const last = frames.at(-1)!;
    expect(last.model).toBe("mpc");
    expect(last.rows[0].query).toBe("naples");
  });
});

describe("selection", () => {
  it("replaces the input with the chosen query and re-queries", async () => {
    const { fetcher, pending, respond } = manualFetcher();
    const { session, frames } = makeSession(fetcher);
    session.setInput("re");
    vi.advanceTimersByTime(50);
    respond(pending[0], ["restaurants", "recipes"]);
    await flushMicrotasks();

    session.selectRow(1);
    expect(session.getView().input).toBe("restaurants");
    await flushMicrotasks();
    expect(pending.at(-1)!.prefix).toBe("restaurants");
    respond(pending.at(-1)!, ["restaurants near me"]);
    await flushMicrotasks();
    expect(frames.at(-1)!.rows[0].query).toBe("restaurants near me");
  });
});

describe("failures", () => {
  it("shows a banner and clears suggestions on network failure", async () => {
    const { fetcher, pending, respond } = manualFetcher();
    const { session, frames } = makeSession(fetcher);
    session.setInput("re");
    vi.advanceTimersByTime(50);
    respond(pending[0], ["red"]);
    await flushMicrotasks();

    session.setInput("res");
    vi.advanceTimersByTime(50);
    pending[1].reject(new Error("models not loaded"));
    await flushMicrotasks();
    const last = frames.at(-1)!;
    expect(last.error).toBe("models not loaded");
    expect(last.rows).toHaveLength(0);
  });

  it("ignores abort rejections from superseded requests", async () => {
    const { fetcher, pending, respond } = manualFetcher();
    const { session, frames } = makeSession(fetcher);
    session.setInput("a");
    vi.advanceTimersByTime(50);
    session.setInput("ab");
    vi.advanceTimersByTime(50); // aborts the "a" request
    await flushMicrotasks();
    expect(frames.every((f) => f.error === null)).toBe(true);
    respond(pending[1], ["abacus"]);
    await flushMicrotasks();
    expect(frames.at(-1)!.rows[0].query).toBe("abacus");
  });
});
