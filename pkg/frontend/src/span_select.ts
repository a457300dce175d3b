// Pointer selection to character range, sentence-snapped by default.

import type { SentenceOffset } from "./types.js";

export interface SpanRange {
  start: number;
  end: number;
}

/**
 * Snap a raw [start, end) selection to the sentence boundaries it touches.
 * With the override active the raw range is kept so fragments (echo
 * questions) can be annotated. Returns null for empty or out-of-text
 * selections: a zero-length click never creates a unit.
 */
export function spanSelect(
  sentences: SentenceOffset[],
  rawStart: number,
  rawEnd: number,
  override = false,
): SpanRange | null {
  if (rawStart > rawEnd) {
    [rawStart, rawEnd] = [rawEnd, rawStart];
  }
  if (rawStart === rawEnd || rawStart < 0) {
    return null;
  }
  if (override) {
    return { start: rawStart, end: rawEnd };
  }
  const touched = sentences.filter((s) => s.start < rawEnd && s.end > rawStart);
  if (touched.length === 0) {
    return null;
  }
  return {
    start: Math.min(...touched.map((s) => s.start)),
    end: Math.max(...touched.map((s) => s.end)),
  };
}

/** Sentences fully or partly covered by a character range. */
export function sentencesInRange(
  sentences: SentenceOffset[],
  range: SpanRange,
): SentenceOffset[] {
  return sentences.filter((s) => s.start < range.end && s.end > range.start);
}
