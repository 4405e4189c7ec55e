/** Pure view-state: the submission draft and the rules for when it is
 * complete enough to submit. Rendering and transport live elsewhere. */

import type { Bucket, EventBody, ItemPayload, Mode } from "./api.js";
import { ALL_GOOD, NONE_GOOD } from "./api.js";

export interface Draft {
  /** arm_id -> bucket selections (grade mode). */
  grades: Record<string, Bucket>;
  /** chosen arm_id, ALL_GOOD, or NONE_GOOD (compare mode). */
  choice: string | null;
}

export function emptyDraft(): Draft {
  return { grades: {}, choice: null };
}

export function setGrade(draft: Draft, armId: string, bucket: Bucket): Draft {
  return { ...draft, grades: { ...draft.grades, [armId]: bucket } };
}

export function setChoice(draft: Draft, choice: string): Draft {
  // picking the same choice again clears it
  return { ...draft, choice: draft.choice === choice ? null : choice };
}

/** Submit is enabled only when the draft satisfies the mode: every arm
 * graded, or exactly one choice (including the all/none escape hatches). */
export function canSubmit(mode: Mode, item: ItemPayload, draft: Draft): boolean {
  if (mode === "grade") {
    return item.arms.every((arm) => draft.grades[arm.arm_id] !== undefined);
  }
  if (draft.choice === null) {
    return false;
  }
  return (
    draft.choice === ALL_GOOD ||
    draft.choice === NONE_GOOD ||
    item.arms.some((arm) => arm.arm_id === draft.choice)
  );
}

/** The events a complete draft submits, in a fixed order. */
export function draftEvents(mode: Mode, item: ItemPayload, draft: Draft): EventBody[] {
  if (mode === "grade") {
    return item.arms.map((arm) => ({
      type: "grade",
      arm_id: arm.arm_id,
      bucket: draft.grades[arm.arm_id]!,
    }));
  }
  return [{ type: "choice", winner: draft.choice! }];
}

export const BUCKETS: readonly Bucket[] = ["all", "most", "some", "none"] as const;

export const BUCKET_LABELS: Record<Bucket, string> = {
  all: "All (100%)",
  most: "Most (at least 75%)",
  some: "Some (at least 1 fact, under 75%)",
  none: "None (0%)",
};

/** Neutral display name for the arm at a presentation position. */
export function armLabel(position: number): string {
  return `Summary ${String.fromCharCode(65 + position)}`;
}
