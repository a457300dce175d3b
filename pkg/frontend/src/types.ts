// Closed vocabularies mirrored from the server's gold-unit schema.

export const INTERACTIONAL_CONTEXTS = ["interview", "non-interview"] as const;

export const ADDRESSEES = ["individual", "collective", "audience", "self"] as const;

export const FORMS = [
  "wh",
  "polar",
  "alternative",
  "tag",
  "declarative-question",
  "elliptic",
  "indirect",
] as const;

export const STANCE_LABELS = [
  "framing-procedural",
  "information-seeking",
  "rhetorical",
  "leading",
  "tag",
  "echo-clarification",
] as const;

export const MACRO_AXES = [
  "Authority positioning",
  "Framing/agenda-setting",
  "Stance/alignment",
  "Legitimation",
  "Discursive strategy",
] as const;

export type InteractionalContext = (typeof INTERACTIONAL_CONTEXTS)[number];
export type Addressee = (typeof ADDRESSEES)[number];
export type Form = (typeof FORMS)[number];
export type StanceLabel = (typeof STANCE_LABELS)[number];
export type MacroAxis = (typeof MACRO_AXES)[number];

export interface SentenceOffset {
  sent_id: number;
  start: number;
  end: number;
  text: string;
}

export interface Prelabel {
  sent_id: number;
  stance: string | null;
  stance_conf: number | null;
}

export interface ArticlePayload {
  article_id: string;
  text: string;
  sentences: SentenceOffset[];
  prelabels: Prelabel[];
}

export interface TaskInfo {
  task_id: string;
  article_id: string;
  component: string;
  annotators: string[];
  status: Record<string, string>;
}

export interface UnitPayload {
  unit_id: string;
  start: number;
  end: number;
  text: string;
  interactional_context: string;
  addressee: string;
  form: string;
  function: string;
  macro_axes: string[];
  answer_realized: boolean;
}

// Form state while the annotator is still choosing values. Selection state
// is ui-only; everything else maps onto the unit payload.
export interface UnitDraft {
  start: number | null;
  end: number | null;
  text: string;
  snapOverride: boolean;
  interactional_context: string | null;
  addressee: string | null;
  form: string | null;
  function: string | null;
  macro_axes: string[];
  answer_realized: boolean | null;
}

export function emptyDraft(): UnitDraft {
  return {
    start: null,
    end: null,
    text: "",
    snapOverride: false,
    interactional_context: null,
    addressee: null,
    form: null,
    function: null,
    macro_axes: [],
    answer_realized: null,
  };
}
