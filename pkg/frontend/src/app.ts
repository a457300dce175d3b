// Browser entry point: task loop, article rendering, span selection, and
// the coding form. All state of record lives on the server; this module
// only holds the current draft and the base version for optimistic saves.

import { ApiClient, ConflictError } from "./api.js";
import {
  FIELD_ORDER,
  axisDisabled,
  canSubmit,
  prelabelSuggestion,
  validateDraft,
} from "./coding_form.js";
import { sentencesInRange, spanSelect } from "./span_select.js";
import {
  ADDRESSEES,
  FORMS,
  INTERACTIONAL_CONTEXTS,
  MACRO_AXES,
  STANCE_LABELS,
  emptyDraft,
  type ArticlePayload,
  type TaskInfo,
  type UnitDraft,
  type UnitPayload,
} from "./types.js";

const api = new ApiClient();

interface SessionState {
  annotator: string;
  task: TaskInfo | null;
  article: ArticlePayload | null;
  units: UnitPayload[];
  version: number;
  draft: UnitDraft;
}

const state: SessionState = {
  annotator: "",
  task: null,
  article: null,
  units: [],
  version: 0,
  draft: emptyDraft(),
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function setStatus(message: string): void {
  el<HTMLElement>("status").textContent = message;
}

async function loadNextTask(): Promise<void> {
  const next = await api.nextTask(state.annotator);
  if (next.state === "done" || !next.task) {
    state.task = null;
    state.article = null;
    setStatus("All assigned tasks are complete.");
    renderArticle();
    renderUnits();
    return;
  }
  state.task = next.task;
  state.article = await api.article(next.task.article_id);
  const existing = await api.taskUnits(next.task.task_id, state.annotator);
  state.units = existing.units;
  state.version = existing.version;
  state.draft = emptyDraft();
  setStatus(`Task ${next.task.task_id} (${next.task.component}), article ${next.task.article_id}`);
  renderArticle();
  renderForm();
  renderUnits();
}

function renderArticle(): void {
  const host = el<HTMLElement>("article");
  host.textContent = "";
  if (!state.article) {
    return;
  }
  const text = state.article.text;
  const prelabeled = new Set(
    state.article.prelabels.filter((p) => p.stance !== null).map((p) => p.sent_id),
  );
  let cursor = 0;
  for (const s of state.article.sentences) {
    if (s.start > cursor) {
      host.appendChild(document.createTextNode(text.slice(cursor, s.start)));
    }
    const span = document.createElement("span");
    span.className = prelabeled.has(s.sent_id) ? "sentence suggested" : "sentence";
    span.dataset.start = String(s.start);
    span.dataset.end = String(s.end);
    span.textContent = text.slice(s.start, s.end);
    host.appendChild(span);
    cursor = s.end;
  }
  if (cursor < text.length) {
    host.appendChild(document.createTextNode(text.slice(cursor)));
  }
}

function selectionOffsets(): { start: number; end: number } | null {
  const sel = window.getSelection();
  if (!sel || sel.rangeCount === 0 || sel.isCollapsed || !state.article) {
    return null;
  }
  const range = sel.getRangeAt(0);
  const host = el<HTMLElement>("article");
  if (!host.contains(range.commonAncestorContainer)) {
    return null;
  }
  const selected = sel.toString();
  if (!selected) {
    return null;
  }
  // Locate the selection in the article text via the first selected
  // sentence span, so duplicate substrings resolve correctly.
  const probe = range.startContainer.parentElement;
  const base = probe?.dataset?.start ? Number(probe.dataset.start) : 0;
  const start = state.article.text.indexOf(selected, base + range.startOffset - selected.length < 0 ? 0 : base);
  if (start < 0) {
    return null;
  }
  return { start, end: start + selected.length };
}

function onSelect(): void {
  if (!state.article) {
    return;
  }
  const raw = selectionOffsets();
  if (!raw) {
    return;
  }
  const override = el<HTMLInputElement>("override").checked;
  const snapped = spanSelect(state.article.sentences, raw.start, raw.end, override);
  if (!snapped) {
    return;
  }
  state.draft.start = snapped.start;
  state.draft.end = snapped.end;
  state.draft.text = state.article.text.slice(snapped.start, snapped.end);
  state.draft.snapOverride = override;
  renderForm();
}

function radioGroup(name: string, options: readonly string[], chosen: string | null): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "choices";
  for (const opt of options) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = name;
    input.value = opt;
    input.checked = chosen === opt;
    input.addEventListener("change", () => {
      (state.draft as unknown as Record<string, unknown>)[name] = opt;
      renderForm();
    });
    label.appendChild(input);
    label.appendChild(document.createTextNode(opt));
    wrap.appendChild(label);
  }
  return wrap;
}

function fieldBlock(title: string, body: HTMLElement): HTMLElement {
  const block = document.createElement("fieldset");
  const legend = document.createElement("legend");
  legend.textContent = title;
  block.appendChild(legend);
  block.appendChild(body);
  return block;
}

function renderForm(): void {
  const host = el<HTMLElement>("form-host");
  host.textContent = "";
  if (!state.article) {
    return;
  }
  const spanInfo = document.createElement("p");
  spanInfo.className = "span-info";
  spanInfo.textContent =
    state.draft.start === null
      ? "Select a span in the article to begin."
      : `Span [${state.draft.start}, ${state.draft.end}): “${state.draft.text}”`;
  host.appendChild(spanInfo);

  if (state.draft.start !== null && state.draft.end !== null) {
    const covered = sentencesInRange(state.article.sentences, {
      start: state.draft.start,
      end: state.draft.end,
    });
    const hint = prelabelSuggestion(
      state.article.prelabels,
      covered.map((s) => s.sent_id),
    );
    if (hint) {
      const tip = document.createElement("p");
      tip.className = "suggestion";
      tip.textContent = `Model suggestion: ${hint} (not applied)`;
      host.appendChild(tip);
    }
  }

  const groups: Record<string, HTMLElement> = {
    interactional_context: radioGroup(
      "interactional_context",
      INTERACTIONAL_CONTEXTS,
      state.draft.interactional_context,
    ),
    form: radioGroup("form", FORMS, state.draft.form),
    function: radioGroup("function", STANCE_LABELS, state.draft.function),
    addressee: radioGroup("addressee", ADDRESSEES, state.draft.addressee),
    macro_axes: axesGroup(),
    answer_realized: answerGroup(),
  };
  for (const field of FIELD_ORDER) {
    host.appendChild(fieldBlock(field.replace(/_/g, " "), groups[field]));
  }

  const errors = validateDraft(state.draft, "draft").errors;
  const errHost = document.createElement("ul");
  errHost.className = "errors";
  for (const e of errors) {
    if (e.field === "span" && state.draft.start === null) {
      continue;
    }
    const li = document.createElement("li");
    li.textContent = `${e.field}: ${e.message}`;
    errHost.appendChild(li);
  }
  host.appendChild(errHost);

  const add = document.createElement("button");
  add.textContent = "Add unit";
  add.disabled = !canSubmit(state.draft);
  add.addEventListener("click", addUnit);
  host.appendChild(add);
}

function axesGroup(): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "choices";
  for (const axis of MACRO_AXES) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "checkbox";
    input.value = axis;
    input.checked = state.draft.macro_axes.includes(axis);
    input.disabled = axisDisabled(state.draft, axis);
    input.addEventListener("change", () => {
      if (input.checked) {
        state.draft.macro_axes = [...state.draft.macro_axes, axis];
      } else {
        state.draft.macro_axes = state.draft.macro_axes.filter((a) => a !== axis);
      }
      renderForm();
    });
    label.appendChild(input);
    label.appendChild(document.createTextNode(axis));
    wrap.appendChild(label);
  }
  return wrap;
}

function answerGroup(): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "choices";
  for (const value of [true, false]) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = "answer_realized";
    input.checked = state.draft.answer_realized === value;
    input.addEventListener("change", () => {
      state.draft.answer_realized = value;
      renderForm();
    });
    label.appendChild(input);
    label.appendChild(document.createTextNode(value ? "yes" : "no"));
    wrap.appendChild(label);
  }
  return wrap;
}

function addUnit(): void {
  const unitId = `${state.annotator}-${state.task?.task_id}-${state.units.length}`;
  const result = validateDraft(state.draft, unitId);
  if (!result.payload) {
    return;
  }
  state.units = [...state.units, result.payload];
  state.draft = emptyDraft();
  renderForm();
  renderUnits();
}

function renderUnits(): void {
  const host = el<HTMLElement>("units");
  host.textContent = "";
  state.units.forEach((u, i) => {
    const li = document.createElement("li");
    li.textContent = `[${u.start}, ${u.end}) ${u.function} — “${u.text.slice(0, 60)}”`;
    const remove = document.createElement("button");
    remove.textContent = "remove";
    remove.addEventListener("click", () => {
      state.units = state.units.filter((_, k) => k !== i);
      renderUnits();
    });
    li.appendChild(remove);
    host.appendChild(li);
  });
}

async function saveTask(): Promise<void> {
  if (!state.task) {
    return;
  }
  try {
    const result = await api.saveUnits(
      state.task.task_id,
      state.annotator,
      state.version,
      state.units,
    );
    state.version = result.version;
    setStatus(`Saved task ${state.task.task_id} at version ${result.version}.`);
    await loadNextTask();
  } catch (err) {
    if (err instanceof ConflictError) {
      const reload = window.confirm(
        "This task changed on the server since you loaded it. Reload the latest version?",
      );
      if (reload && state.task) {
        const latest = await api.taskUnits(state.task.task_id, state.annotator);
        state.units = latest.units;
        state.version = latest.version;
        renderUnits();
      }
      return;
    }
    setStatus(`Save failed: ${String(err)}`);
  }
}

async function refreshFooter(): Promise<void> {
  const progress = await api.progress();
  const agreement = await api.agreement();
  el<HTMLElement>("footer").textContent =
    `progress: ${JSON.stringify(progress)} · agreement: ${JSON.stringify(agreement)}`;
}

export function boot(): void {
  el<HTMLButtonElement>("start").addEventListener("click", async () => {
    state.annotator = el<HTMLInputElement>("annotator").value.trim();
    if (!state.annotator) {
      setStatus("Enter an annotator id first.");
      return;
    }
    await loadNextTask();
    await refreshFooter();
  });
  el<HTMLButtonElement>("save").addEventListener("click", () => void saveTask());
  el<HTMLElement>("article").addEventListener("mouseup", onSelect);
}

if (typeof document !== "undefined" && document.getElementById("article")) {
  boot();
}
