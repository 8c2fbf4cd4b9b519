import { httpFetcher } from "./api.js";
import { SuggestionSession, SuggestionView } from "./session.js";

const input = document.getElementById("query") as HTMLInputElement;
const modelSelect = document.getElementById("model") as HTMLSelectElement;
const list = document.getElementById("suggestions") as HTMLUListElement;
const status = document.getElementById("status") as HTMLDivElement;
const banner = document.getElementById("banner") as HTMLDivElement;

function render(view: SuggestionView): void {
  banner.hidden = view.error === null;
  banner.textContent = view.error ?? "";

  list.replaceChildren(
    ...view.rows.map((row) => {
      const item = document.createElement("li");
      const rank = document.createElement("span");
      rank.className = "rank";
      rank.textContent = String(row.rank);
      const text = document.createElement("span");
      text.className = "query";
      text.textContent = row.query;
      const score = document.createElement("span");
      score.className = "score";
      score.textContent = row.score.toFixed(3);
      item.append(rank, text, score);
      item.addEventListener("click", () => {
        session.selectRow(row.rank);
        input.value = session.getView().input;
        input.focus();
      });
      return item;
    }),
  );

  status.textContent =
    view.latencyMs !== null && view.rows.length
      ? `${view.rows.length} suggestions · ${view.latencyMs.toFixed(1)} ms · ${view.model}`
      : view.pending
        ? "…"
        : "";
}

const session = new SuggestionSession({
  fetcher: httpFetcher(""),
  onRender: render,
  debounceMs: 50,
  numCandidates: 10,
});

input.addEventListener("input", () => session.setInput(input.value));
modelSelect.addEventListener("change", () => session.setModel(modelSelect.value));
