export interface SuggestionRow {
  query: string;
  score: number;
  rank: number;
}

export interface SuggestResponse {
  prefix: string;
  normalized_prefix?: string;
  model: string;
  candidates: SuggestionRow[];
  latency_ms: number;
}

export type Fetcher = (
  prefix: string,
  model: string,
  n: number,
  signal: AbortSignal,
) => Promise<SuggestResponse>;

/** Fetcher against the suggestion service; baseUrl "" means same origin. */
export function httpFetcher(baseUrl: string = ""): Fetcher {
  return async (prefix, model, n, signal) => {
    const params = new URLSearchParams({ prefix, model, n: String(n) });
    const resp = await fetch(`${baseUrl}/suggest?${params}`, { signal });
    if (!resp.ok) {
      let detail = `HTTP ${resp.status}`;
      try {
        const body = (await resp.json()) as { error?: string };
        if (body.error) detail = body.error;
      } catch {
        // keep the status text
      }
      throw new Error(detail);
    }
    return (await resp.json()) as SuggestResponse;
  };
}
