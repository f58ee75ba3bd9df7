/** The reading pane: abstract with highlighted jargon and a definition panel.
 *
 * Definitions are reachable two ways: hovering a highlight shows a tooltip,
 * and clicking it activates the matching entry in the list below the
 * abstract.
 */

import { segmentAbstract } from "./highlight.js";
import type { JargonResponse, JargonTerm } from "./types.js";

const NO_DEFINITION_TEXT = "No definition could be generated for this term.";

export function renderReaderView(container: HTMLElement, jargon: JargonResponse): void {
  container.replaceChildren();

  const abstractEl = document.createElement("p");
  abstractEl.className = "abstract";
  const segments = segmentAbstract(jargon.abstract, jargon.terms);
  for (const segment of segments) {
    if (segment.term === null) {
      abstractEl.appendChild(document.createTextNode(segment.text));
    } else {
      abstractEl.appendChild(highlightMark(segment.text, segment.term, container));
    }
  }
  container.appendChild(abstractEl);

  const tooltip = document.createElement("div");
  tooltip.className = "term-tooltip";
  tooltip.hidden = true;
  container.appendChild(tooltip);

  container.appendChild(definitionPanel(jargon.terms));
}

function highlightMark(text: string, term: JargonTerm, root: HTMLElement): HTMLElement {
  const mark = document.createElement("mark");
  mark.className = "jargon-term";
  mark.dataset.term = term.term;
  mark.textContent = text;

  mark.addEventListener("mouseenter", () => {
    const tooltip = root.querySelector<HTMLElement>(".term-tooltip");
    if (!tooltip) return;
    tooltip.textContent = definitionText(term);
    tooltip.hidden = false;
  });
  mark.addEventListener("mouseleave", () => {
    const tooltip = root.querySelector<HTMLElement>(".term-tooltip");
    if (tooltip) tooltip.hidden = true;
  });
  mark.addEventListener("click", () => {
    for (const entry of root.querySelectorAll(".definition-entry")) {
      entry.classList.toggle("active", (entry as HTMLElement).dataset.term === term.term);
    }
  });
  return mark;
}

function definitionPanel(terms: JargonTerm[]): HTMLElement {
  const panel = document.createElement("section");
  panel.className = "definition-panel";
  if (terms.length === 0) {
    const none = document.createElement("p");
    none.className = "empty-state";
    none.textContent = "No jargon was identified for this reader.";
    panel.appendChild(none);
    return panel;
  }
  const list = document.createElement("dl");
  for (const term of terms) {
    const entry = document.createElement("div");
    entry.className = "definition-entry";
    entry.dataset.term = term.term;

    const dt = document.createElement("dt");
    dt.textContent = term.term;
    entry.appendChild(dt);

    const dd = document.createElement("dd");
    dd.textContent = definitionText(term);
    entry.appendChild(dd);

    list.appendChild(entry);
  }
  panel.appendChild(list);
  return panel;
}

function definitionText(term: JargonTerm): string {
  return term.definition ?? NO_DEFINITION_TEXT;
}

/** Shown when jargon has not been computed yet for this (article, reader). */
export function renderNotComputed(container: HTMLElement, readerId: string): void {
  container.replaceChildren();
  const note = document.createElement("p");
  note.className = "placeholder";
  note.textContent =
    `Jargon has not been computed for reader "${readerId}" on this article yet. ` +
    "Run the identify and define pipeline steps, then reload.";
  container.appendChild(note);
}
