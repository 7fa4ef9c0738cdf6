export interface Source {
  doc: string;
  section: string;
}

export interface Candidate {
  question: string;
  answer: string;
  score: number;
  source: Source;
}

export interface AskResponse {
  candidates: Candidate[];
  history_id: string;
  top_k_clamped?: boolean;
}

export interface ApiError {
  code: string;
  message: string;
}

export interface AppConfig {
  /** Origin prefix for API calls; empty string = same origin. */
  baseUrl: string;
  /** Viewer URL template, e.g. "/docs/{doc}.html#{section}"; null disables jumps. */
  viewerTemplate: string | null;
  topK: number;
}

export const DEFAULT_CONFIG: AppConfig = {
  baseUrl: "",
  viewerTemplate: "/docs/{doc}.html#{section}",
  topK: 5,
};
