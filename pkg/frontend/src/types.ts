// Wire types for the /api/v1 JSON surface (mirrors docs/schemas/*.json).

export type SessionStateName = "empty" | "uploaded" | "analyzed" | "extended" | "ended";
export type Level = "beginner" | "intermediate" | "advanced";
export type ScopeKind = "measure" | "phrase" | "piece";
export type EditField = "degree" | "rhythm";

export interface SessionSummary {
  id: string;
  state: SessionStateName;
  bpm: number;
  created: number;
  updated: number;
  config: {
    seed: number;
    substitution_probability: number;
    ornament_rate: number;
  };
  measure_count: number;
  phrase_count: number;
  analysis: {
    key: string;
    ambiguous: boolean;
    key_ranking: [string, number][];
    measure_chords: (string | null)[];
    degrees: string[];
    fitted_rhythm_id: number;
    fitted_distance: number;
  } | null;
  edits: number;
}

export interface OrnamentInfo {
  kind: "appoggiatura" | "mordent" | "trill";
  auxiliary: number;
}

export interface ScoreEvent {
  kind: "note" | "rest";
  onset: string;      // rational beats, e.g. "1/2"
  duration: string;
  midi?: number;
  name?: string;
  ornament?: OrnamentInfo;
}

export interface ScoreMeasure {
  index: number;
  source: "input" | "generated" | "edited";
  chord: string | null;
  degree: string | null;
  events: ScoreEvent[];
}

export interface ScorePart {
  role: "right_hand" | "left_hand";
  measures: ScoreMeasure[];
}

export interface PhraseInfo {
  index: number;
  entry_id: string;
  start_measure: number;
  length: number;
  progression: string[];
  chords: string[];
  rhythm_plan: number[];
  substituted: boolean[];
}

export interface ScoreDocument {
  state: SessionStateName;
  bpm: number;
  key: { tonic: number; mode: "major" | "minor"; name: string };
  input_measures: number;
  measure_count: number;
  parts: ScorePart[];
  phrases: PhraseInfo[];
  final_measure: number | null;
}

export interface ExplanationSection {
  aspect: "chords" | "rhythm" | "embellishment";
  text: string;
  facts: Record<string, string[]>;
}

export interface ExplanationDoc {
  scope: { kind: ScopeKind; index: number | null };
  level: Level;
  sections: ExplanationSection[];
  terms: string[];
}

export interface Alternatives {
  measure: number;
  degrees: string[];
  rhythms: number[];
}

export interface MentorReply {
  query: string;
  response: string;
  source: "live" | "stub";
  note?: string;
}

export interface ContinueReply {
  phrase: PhraseInfo;
  score: ScoreDocument;
}

export interface EndReply {
  end: { final_measure: number; chord: string | null };
  score: ScoreDocument;
}

export interface EditReply {
  measure: {
    measure: number;
    right_hand: ScoreMeasure;
    left_hand: ScoreMeasure | null;
  };
  score: ScoreDocument;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}
