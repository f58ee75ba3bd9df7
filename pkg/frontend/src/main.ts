/** App bootstrap: filters, reader selection, reading pane, judgment queue. */

import { ApiClient, ApiError } from "./api.js";
import { hideErrorBanner, renderArticleList, showErrorBanner } from "./articleList.js";
import { JudgmentFlow } from "./judgments.js";
import { renderNotComputed, renderReaderView } from "./readerView.js";
import { initialViewState, type ViewState } from "./types.js";

const CATEGORY_CHOICES = ["cs.AI", "cs.HC", "cs.CY"];

export async function bootstrap(root: HTMLElement, api: ApiClient = new ApiClient()): Promise<void> {
  root.replaceChildren();

  const header = document.createElement("header");
  header.innerHTML = "<h1>Science de-jargonizer</h1>";
  root.appendChild(header);

  const controls = document.createElement("form");
  controls.className = "controls";
  controls.addEventListener("submit", (e) => e.preventDefault());
  root.appendChild(controls);

  const listHost = document.createElement("section");
  listHost.className = "article-list";
  root.appendChild(listHost);

  const readerPane = document.createElement("section");
  readerPane.className = "reader-pane";
  root.appendChild(readerPane);

  const judgmentHost = document.createElement("section");
  judgmentHost.className = "judgment-host";
  root.appendChild(judgmentHost);

  const profiles = await api.getProfiles();
  const state: ViewState = initialViewState(profiles[0]?.reader_id ?? "rid0");

  // reader dropdown
  const readerSelect = document.createElement("select");
  readerSelect.className = "reader-select";
  for (const profile of profiles) {
    const option = document.createElement("option");
    option.value = profile.reader_id;
    option.textContent = `${profile.reader_id}: ${profile.description.slice(0, 60)}`;
    readerSelect.appendChild(option);
  }
  controls.appendChild(labelled("Reader", readerSelect));

  // category filter
  const categorySelect = document.createElement("select");
  categorySelect.className = "category-select";
  categorySelect.appendChild(new Option("all categories", ""));
  for (const cat of CATEGORY_CHOICES) {
    categorySelect.appendChild(new Option(cat, cat));
  }
  controls.appendChild(labelled("Category", categorySelect));

  // search box; matches both titles and abstracts, and says so
  const search = document.createElement("input");
  search.type = "search";
  search.placeholder = "Search titles and abstracts";
  search.className = "search-input";
  controls.appendChild(labelled("Search", search));

  const judgeButton = document.createElement("button");
  judgeButton.type = "button";
  judgeButton.textContent = "Judge pending pairs";
  controls.appendChild(judgeButton);

  async function refreshList(): Promise<void> {
    try {
      const page = await api.getArticles({
        category: categorySelect.value || undefined,
        q: search.value || undefined,
      });
      hideErrorBanner(listHost);
      renderArticleList(listHost, page, {
        onSelect: (id) => void openArticle(id),
        onRetry: () => void refreshList(),
      });
    } catch (err) {
      showErrorBanner(listHost, describe(err), () => void refreshList());
    }
  }

  async function openArticle(arxivId: string): Promise<void> {
    state.activeArticle = arxivId;
    try {
      const jargon = await api.getJargon(arxivId, readerSelect.value || state.readerId);
      renderReaderView(readerPane, jargon);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        renderNotComputed(readerPane, readerSelect.value || state.readerId);
        return;
      }
      showErrorBanner(readerPane, describe(err), () => void openArticle(arxivId));
    }
  }

  categorySelect.addEventListener("change", () => void refreshList());
  search.addEventListener("change", () => void refreshList());
  readerSelect.addEventListener("change", () => {
    state.readerId = readerSelect.value;
    if (state.activeArticle) void openArticle(state.activeArticle);
  });
  judgeButton.addEventListener("click", () => {
    const flow = new JudgmentFlow(api, judgmentHost, readerSelect.value || state.readerId);
    void flow.start();
  });

  await refreshList();
}

function labelled(text: string, control: HTMLElement): HTMLElement {
  const label = document.createElement("label");
  label.className = "control";
  const span = document.createElement("span");
  span.textContent = text;
  label.appendChild(span);
  label.appendChild(control);
  return label;
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

// Browser entry point; tests import bootstrap directly instead.
if (typeof document !== "undefined" && document.getElementById("app")) {
  void bootstrap(document.getElementById("app") as HTMLElement);
}
