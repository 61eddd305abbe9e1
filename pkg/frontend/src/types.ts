// JSON shapes of the /v1 API, mirrored field-for-field.

export interface ResultTableJson {
  columns: string[];
  rows: unknown[][];
  truncated: boolean;
  total_row_estimate: number;
}

export interface PassageJson {
  chunk_id: string;
  doc_id: string;
  title: string;
  page: number;
  section: string | null;
  text: string;
  score: number;
}

export interface EvidenceJson {
  table: ResultTableJson;
  passages: PassageJson[];
  k: number;
  table_error: string | null;
  passages_error: string | null;
}

export interface FiltersJson {
  ts_range: [number, number] | null;
  coords: [number, number][] | null;
  families: string[] | null;
  qualifiers: string[] | null;
}

export interface PlanJson {
  sql: string;
  lit_query: string;
  applied_filters: FiltersJson;
  planner_raw: string;
  fallback: boolean;
}

export interface AnswerJson {
  text: string;
  data_citations: string[];
  literature_citations: string[];
  provider_raw: string;
  warnings: string[];
}

export interface TurnJson {
  index: number;
  question: string;
  plan: PlanJson;
  evidence: EvidenceJson;
  answer: AnswerJson;
  started_at: number;
  finished_at: number;
}

export interface AskResponse {
  session_id: string;
  turn: TurnJson;
}

export interface TranscriptJson {
  session_id: string;
  created_at: number;
  turns: TurnJson[];
}

export interface HealthJson {
  status: string;
  components: Record<string, boolean>;
}
