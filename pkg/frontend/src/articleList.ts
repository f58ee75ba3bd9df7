/** Article browsing: cards, empty state, and a retryable error banner. */

import type { ArticlePage, ArticleSummary } from "./types.js";

export interface ArticleListHandlers {
  onSelect: (arxivId: string) => void;
  onRetry: () => void;
}

export function renderArticleList(
  container: HTMLElement,
  page: ArticlePage,
  handlers: ArticleListHandlers,
): void {
  container.replaceChildren();
  if (page.items.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No articles match the current filters.";
    container.appendChild(empty);
    return;
  }
  for (const article of page.items) {
    container.appendChild(articleCard(article, handlers.onSelect));
  }
  const footer = document.createElement("p");
  footer.className = "list-footer";
  footer.textContent = `Showing ${page.items.length} of ${page.total} articles (page ${page.page})`;
  container.appendChild(footer);
}

function articleCard(article: ArticleSummary, onSelect: (id: string) => void): HTMLElement {
  const card = document.createElement("article");
  card.className = "article-card";
  card.dataset.arxivId = article.arxiv_id;

  const title = document.createElement("h3");
  title.textContent = article.title;
  card.appendChild(title);

  const meta = document.createElement("p");
  meta.className = "article-meta";
  meta.textContent = `${article.arxiv_id} · ${article.all_categories.join(", ")} · updated ${article.updated_at}`;
  card.appendChild(meta);

  const preview = document.createElement("p");
  preview.className = "article-preview";
  const text = article.abstract;
  preview.textContent = text.length > 240 ? `${text.slice(0, 240)}…` : text;
  card.appendChild(preview);

  card.addEventListener("click", () => onSelect(article.arxiv_id));
  return card;
}

/** Error banner shown above the list; the list itself is left untouched. */
export function showErrorBanner(host: HTMLElement, message: string, onRetry: () => void): void {
  hideErrorBanner(host);
  const banner = document.createElement("div");
  banner.className = "error-banner";
  banner.setAttribute("role", "alert");

  const text = document.createElement("span");
  text.textContent = message;
  banner.appendChild(text);

  const retry = document.createElement("button");
  retry.textContent = "Retry";
  retry.addEventListener("click", () => {
    hideErrorBanner(host);
    onRetry();
  });
  banner.appendChild(retry);

  host.prepend(banner);
}

export function hideErrorBanner(host: HTMLElement): void {
  host.querySelector(".error-banner")?.remove();
}
