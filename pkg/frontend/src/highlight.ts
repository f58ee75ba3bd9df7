/** Span layout for in-place jargon highlighting.
 *
 * Served spans may nest (a term inside a longer term) or collide once
 * different surface forms map to overlapping offsets. The abstract is
 * rendered with non-overlapping marks only: the longest span wins, so a
 * nested span never produces a mark inside another mark.
 */

import type { JargonTerm } from "./types.js";

export interface Segment {
  text: string;
  term: JargonTerm | null;
}

function overlaps(a: JargonTerm, b: JargonTerm): boolean {
  return a.span.start < b.span.end && b.span.start < a.span.end;
}

/** Keep the longest span of any overlapping group (ties: earlier start wins). */
export function dropNestedSpans(terms: JargonTerm[]): JargonTerm[] {
  const byLength = [...terms].sort((a, b) => {
    const la = a.span.end - a.span.start;
    const lb = b.span.end - b.span.start;
    if (lb !== la) return lb - la;
    return a.span.start - b.span.start;
  });
  const kept: JargonTerm[] = [];
  for (const candidate of byLength) {
    if (!kept.some((k) => overlaps(k, candidate))) {
      kept.push(candidate);
    }
  }
  return kept.sort((a, b) => a.span.start - b.span.start);
}

/** Split the abstract into plain and highlighted segments, in reading order. */
export function segmentAbstract(abstract: string, terms: JargonTerm[]): Segment[] {
  const visible = dropNestedSpans(
    terms.filter((t) => t.span.start >= 0 && t.span.end <= abstract.length),
  );
  const segments: Segment[] = [];
  let cursor = 0;
  for (const term of visible) {
    if (term.span.start > cursor) {
      segments.push({ text: abstract.slice(cursor, term.span.start), term: null });
    }
    segments.push({ text: abstract.slice(term.span.start, term.span.end), term });
    cursor = term.span.end;
  }
  if (cursor < abstract.length) {
    segments.push({ text: abstract.slice(cursor), term: null });
  }
  return segments;
}
