// Wire types for the annotation service JSON API. The server decides the
// scale order and which end of each scale sits on the left; the client
// renders exactly what it receives and never transforms rating values.

export interface PresentationWire {
  dimension: string;
  civil_label: string;
  uncivil_label: string;
  civil_end_on_left: boolean;
  display_order: number;
}

export interface BatchItemWire {
  snippet_id: string;
  show: string;
  text: string;
  presentations: PresentationWire[];
}

export interface BatchWire {
  batch_id: string | null;
  annotator_id: string;
  items: BatchItemWire[];
  done: boolean;
}

export interface RatingWire {
  dimension: string;
  value: number;
  civil_end_on_left: boolean;
}

export interface SnippetRatingsWire {
  snippet_id: string;
  ratings: RatingWire[];
}

export interface SubmissionWire {
  ratings: SnippetRatingsWire[];
}

export interface SubmitAckWire {
  stored: number;
  batch_id: string;
}

export interface ValidationProblem {
  snippet_id: string | null;
  dimension: string | null;
  problem: string;
}

export interface ProgressWire {
  annotators: Record<
    string,
    {
      total_snippets: number;
      completed_snippets: number;
      batches_total: number;
      batches_submitted: number;
    }
  >;
  stored_records: number;
}

export const SCALE_MIN = 1;
export const SCALE_MAX = 10;
