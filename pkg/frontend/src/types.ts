/** Payload shapes of the backing HTTP API. */

export interface ArticleSummary {
  arxiv_id: string;
  title: string;
  abstract: string;
  primary_category: string;
  all_categories: string[];
  updated_at: string;
  split: string | null;
  has_fulltext: boolean;
}

export interface ArticlePage {
  items: ArticleSummary[];
  page: number;
  page_size: number;
  total: number;
}

export interface Span {
  start: number;
  end: number;
}

export interface JargonTerm {
  term: string;
  span: Span;
  definition: string | null;
  status: string; // ok | no_context | missing
}

export interface JargonResponse {
  arxiv_id: string;
  reader_id: string;
  abstract: string;
  terms: JargonTerm[];
}

export interface Profile {
  reader_id: string;
  description: string;
  expertise_areas: string[];
  ratings: Record<string, number> | null;
}

export interface PendingPair {
  pair_id: string;
  arxiv_id: string;
  term: string;
  slot_a: string | null;
  slot_b: string | null;
}

export type Accuracy = "correct" | "incorrect" | "not_applicable";
export type Preference = "slot_a" | "slot_b" | "tie";

export interface JudgmentBody {
  pair_id: string;
  reader_id: string;
  accuracy_a: Accuracy;
  accuracy_b: Accuracy;
  preference: Preference | null;
}

export interface ViewState {
  categories: string[];
  query: string;
  readerId: string;
  activeArticle: string | null;
  hoverTerm: string | null;
  pendingPairs: PendingPair[];
}

export function initialViewState(readerId: string): ViewState {
  return {
    categories: [],
    query: "",
    readerId,
    activeArticle: null,
    hoverTerm: null,
    pendingPairs: [],
  };
}
