/** Shapes exchanged with the rating service HTTP API. */

export const DIMENSIONS = [
  "simplicity",
  "accuracy",
  "completeness",
  "brevity",
] as const;

export type Dimension = (typeof DIMENSIONS)[number];

export type Scores = Record<Dimension, number>;

/** The blinded payload a rater is allowed to see. */
export interface RaterSample {
  sample_id: string;
  source_sentences: string[];
  adapted_sentences: string[];
}

export interface SessionInfo {
  session_id: string;
  n: number;
  created_at: string;
}

export interface NextPending {
  complete: false;
  sample: RaterSample;
  rated: number;
  total: number;
}

export interface NextComplete {
  complete: true;
  rated: number;
  total: number;
}

export type NextResponse = NextPending | NextComplete;

export interface Progress {
  session_id: string;
  total: number;
  rated: number;
  remaining: number | null;
  complete: boolean;
}

export interface RatingAck {
  record_id: number;
  sample_id: string;
}
