// Wire types for the /v1 service endpoints.

export type Origin = 'EXACT' | 'CORRECTED' | 'EXPANDED';

export interface ConceptChip {
  concept_id: string;
  label: string;
  origin: Origin;
  hop: number;
  weight: number;
}

export interface CohortChip {
  value: string;
  label: string;
}

export interface ParseRendering {
  original: string;
  concepts: ConceptChip[];
  relation_intents: string[];
  cohorts: CohortChip[];
  residual_terms: string[];
  relaxation_log: string[];
}

export interface ResultComponents {
  relation: number;
  concept: number;
  text: number;
}

export interface ResultItem {
  snippet_id: string;
  doc_id: string;
  doc_title: string;
  section_path: string[];
  top_sentence: string;
  score: number;
  components: ResultComponents;
  explanation: string[];
  matched_terms: string[];
}

export interface SearchResponse {
  query: string;
  mode: string;
  parsed: ParseRendering;
  results: ResultItem[];
  took_ms: number;
}

export interface UiError {
  kind: 'network' | 'validation';
  message: string;
}

export interface UiState {
  query: string;
  parsed: ParseRendering | null;
  results: ResultItem[];
  notices: string[];
  loading: boolean;
  error: UiError | null;
}
