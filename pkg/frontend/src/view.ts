// Pure presentation logic: what to render and what to send. Kept free of
// DOM access so the protocol rules are unit-testable.

import {
  SCALE_MAX,
  SCALE_MIN,
  type BatchItemWire,
  type BatchWire,
  type PresentationWire,
  type SubmissionWire,
} from "./protocol.js";

/** Chosen values per snippet, keyed by dimension name. */
export type Selections = Record<string, Record<string, number>>;

export interface ScaleRow {
  dimension: string;
  leftLabel: string;
  rightLabel: string;
  civilEndOnLeft: boolean;
  values: number[];
}

export function scaleValues(): number[] {
  const values: number[] = [];
  for (let v = SCALE_MIN; v <= SCALE_MAX; v += 1) {
    values.push(v);
  }
  return values;
}

function labelsFor(p: PresentationWire): { left: string; right: string } {
  // The civil end label goes wherever the server put the civil end; the
  // value exactly under the left end is 1.
  return p.civil_end_on_left
    ? { left: p.civil_label, right: p.uncivil_label }
    : { left: p.uncivil_label, right: p.civil_label };
}

/** Scale rows for one snippet, in the server-specified display order. */
export function scaleRows(item: BatchItemWire): ScaleRow[] {
  const ordered = [...item.presentations].sort(
    (a, b) => a.display_order - b.display_order,
  );
  return ordered.map((p) => {
    const labels = labelsFor(p);
    return {
      dimension: p.dimension,
      leftLabel: labels.left,
      rightLabel: labels.right,
      civilEndOnLeft: p.civil_end_on_left,
      values: scaleValues(),
    };
  });
}

/** Keyboard entry: digits 1-9 select those values, 0 selects 10. */
export function keyToValue(key: string): number | null {
  if (key >= "1" && key <= "9") {
    return Number(key);
  }
  if (key === "0") {
    return SCALE_MAX;
  }
  return null;
}

export function setSelection(
  selections: Selections,
  snippetId: string,
  dimension: string,
  value: number,
): Selections {
  if (value < SCALE_MIN || value > SCALE_MAX || !Number.isInteger(value)) {
    throw new RangeError(`rating value ${value} outside ${SCALE_MIN}..${SCALE_MAX}`);
  }
  return {
    ...selections,
    [snippetId]: { ...(selections[snippetId] ?? {}), [dimension]: value },
  };
}

export function itemComplete(item: BatchItemWire, selections: Selections): boolean {
  const chosen = selections[item.snippet_id] ?? {};
  return item.presentations.every((p) => chosen[p.dimension] !== undefined);
}

export function batchComplete(batch: BatchWire, selections: Selections): boolean {
  return batch.items.length > 0 && batch.items.every((i) => itemComplete(i, selections));
}

export function completedCount(batch: BatchWire, selections: Selections): number {
  return batch.items.filter((i) => itemComplete(i, selections)).length;
}

/**
 * Submission payload: the user's raw values untouched, plus the served
 * orientation echoed back so the server can verify the client rendered
 * what it intended to score.
 */
export function buildSubmission(batch: BatchWire, selections: Selections): SubmissionWire {
  return {
    ratings: batch.items.map((item) => {
      const chosen = selections[item.snippet_id] ?? {};
      return {
        snippet_id: item.snippet_id,
        ratings: item.presentations.map((p) => {
          const value = chosen[p.dimension];
          if (value === undefined) {
            throw new Error(
              `snippet ${item.snippet_id} is missing a rating for ${p.dimension}`,
            );
          }
          return {
            dimension: p.dimension,
            value,
            civil_end_on_left: p.civil_end_on_left,
          };
        }),
      };
    }),
  };
}

/** Item view for a malformed wire item, instead of silently defaulting. */
export function validateItem(item: BatchItemWire): string | null {
  if (!item.snippet_id || !item.text) {
    return "item is missing its snippet id or text";
  }
  if (item.presentations.length !== 4) {
    return `expected 4 scales, got ${item.presentations.length}`;
  }
  const orders = [...item.presentations].map((p) => p.display_order).sort();
  if (orders.join(",") !== "0,1,2,3") {
    return `display orders ${orders.join(",")} are not a permutation of 0..3`;
  }
  return null;
}
