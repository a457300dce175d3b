// Draft validation mirroring the server's gold-unit schema. The form only
// submits payloads that already pass these checks, so the server never has
// to correct anything.

import {
  ADDRESSEES,
  FORMS,
  INTERACTIONAL_CONTEXTS,
  MACRO_AXES,
  STANCE_LABELS,
  type UnitDraft,
  type UnitPayload,
} from "./types.js";

export interface FieldError {
  field: string;
  message: string;
}

export interface ValidationResult {
  payload: UnitPayload | null;
  errors: FieldError[];
}

// Decision-tree order: context first, then form, then pragmatic function.
export const FIELD_ORDER = [
  "interactional_context",
  "form",
  "function",
  "addressee",
  "macro_axes",
  "answer_realized",
] as const;

function oneOf(value: string | null, allowed: readonly string[]): boolean {
  return value !== null && allowed.includes(value);
}

export function validateDraft(draft: UnitDraft, unitId: string): ValidationResult {
  const errors: FieldError[] = [];
  if (draft.start === null || draft.end === null || draft.start >= draft.end) {
    errors.push({ field: "span", message: "select a text span first" });
  }
  if (!oneOf(draft.interactional_context, INTERACTIONAL_CONTEXTS)) {
    errors.push({ field: "interactional_context", message: "required" });
  }
  if (!oneOf(draft.form, FORMS)) {
    errors.push({ field: "form", message: "required" });
  }
  if (!oneOf(draft.function, STANCE_LABELS)) {
    errors.push({ field: "function", message: "required" });
  }
  if (!oneOf(draft.addressee, ADDRESSEES)) {
    errors.push({ field: "addressee", message: "required" });
  }
  const axes = draft.macro_axes;
  if (axes.length < 1 || axes.length > 2 || axes.some((a) => !MACRO_AXES.includes(a as never))) {
    errors.push({ field: "macro_axes", message: "choose 1 or 2 macro-axes" });
  }
  if (draft.answer_realized === null) {
    errors.push({ field: "answer_realized", message: "required" });
  }
  if (errors.length > 0) {
    return { payload: null, errors };
  }
  return {
    payload: {
      unit_id: unitId,
      start: draft.start as number,
      end: draft.end as number,
      text: draft.text,
      interactional_context: draft.interactional_context as string,
      addressee: draft.addressee as string,
      form: draft.form as string,
      function: draft.function as string,
      macro_axes: [...axes],
      answer_realized: draft.answer_realized as boolean,
    },
    errors: [],
  };
}

/** Submit stays disabled until the draft is fully valid. */
export function canSubmit(draft: UnitDraft): boolean {
  return validateDraft(draft, "probe").payload !== null;
}

/**
 * Whether an unchecked macro-axis checkbox should be disabled: two axes is
 * the ceiling, so a third choice is blocked at the control rather than
 * reported after the fact.
 */
export function axisDisabled(draft: UnitDraft, axis: string): boolean {
  return draft.macro_axes.length >= 2 && !draft.macro_axes.includes(axis);
}

/**
 * Suggested stance for a span, from the model prelabels. Display-only: the
 * caller renders it as a hint and must never write it into the draft.
 */
export function prelabelSuggestion(
  prelabels: { sent_id: number; stance: string | null }[],
  sentIds: number[],
): string | null {
  for (const sid of sentIds) {
    const hit = prelabels.find((p) => p.sent_id === sid && p.stance !== null);
    if (hit) {
      return hit.stance;
    }
  }
  return null;
}
