/** Paginated questionnaire form: state machine plus DOM renderer.
 *
 * Navigation is strictly linear page by page; submit only unlocks once every
 * required question on every page carries a valid answer. An unknown widget
 * kind renders a visible error placeholder and blocks the whole form.
 */

import type { AnswerValue, LocalizedSchema, Question } from "./types.js";

export const KNOWN_WIDGETS = [
  "slider", "checkbox", "radio", "multiselect", "text", "number", "date", "info",
] as const;

export class QuestionnaireForm {
  page = 0; // 0-based cursor into schema.pages
  readonly answers: Record<string, AnswerValue> = {};

  constructor(readonly schema: LocalizedSchema) {}

  get pageCount(): number {
    return this.schema.pages.length;
  }

  questionsOn(page: number): Array<[string, Question]> {
    const ids = this.schema.pages[page]?.questions ?? [];
    return ids.map((qid) => [qid, this.schema.questions[qid]]);
  }

  unknownWidgets(): string[] {
    return Object.entries(this.schema.questions)
      .filter(([, q]) => !(KNOWN_WIDGETS as readonly string[]).includes(q.widget))
      .map(([qid]) => qid);
  }

  setAnswer(qid: string, value: AnswerValue | null): void {
    if (value === null || value === undefined
        || (typeof value === "string" && value.trim() === "")
        || (Array.isArray(value) && value.length === 0)) {
      delete this.answers[qid];
    } else {
      this.answers[qid] = value;
    }
  }

  private answered(qid: string, question: Question): boolean {
    if (question.widget === "info") return true;
    return qid in this.answers;
  }

  missingOn(page: number): string[] {
    return this.questionsOn(page)
      .filter(([qid, q]) => q.required && !this.answered(qid, q))
      .map(([qid]) => qid);
  }

  missingOverall(): string[] {
    const missing: string[] = [];
    for (let page = 0; page < this.pageCount; page++) {
      missing.push(...this.missingOn(page));
    }
    return missing;
  }

  get onLastPage(): boolean {
    return this.page >= this.pageCount - 1;
  }

  canNext(): boolean {
    return !this.onLastPage && this.missingOn(this.page).length === 0
      && this.unknownWidgets().length === 0;
  }

  canPrev(): boolean {
    return this.page > 0;
  }

  next(): void {
    if (this.canNext()) this.page += 1;
  }

  prev(): void {
    if (this.canPrev()) this.page -= 1;
  }

  canSubmit(): boolean {
    return this.unknownWidgets().length === 0 && this.missingOverall().length === 0
      && this.pageCount > 0;
  }
}

/** Render the form's current page into a container and keep controls in sync. */
export function renderQuestionnaire(
  doc: Document,
  container: Element,
  form: QuestionnaireForm,
  onSubmit: (answers: Record<string, AnswerValue>) => void,
): void {
  const rerender = () => renderQuestionnaire(doc, container, form, onSubmit);
  container.innerHTML = "";

  if (form.pageCount === 0) {
    const empty = doc.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "This questionnaire has no questions.";
    container.appendChild(empty);
    return;
  }

  const pageInfo = doc.createElement("div");
  pageInfo.className = "page-indicator";
  const title = form.schema.pages[form.page].title;
  pageInfo.textContent = `${title ? `${title} — ` : ""}page ${form.page + 1} of ${form.pageCount}`;
  container.appendChild(pageInfo);

  for (const [qid, question] of form.questionsOn(form.page)) {
    container.appendChild(renderQuestion(doc, form, qid, question, rerender));
  }

  const nav = doc.createElement("div");
  nav.className = "form-nav";

  const prev = doc.createElement("button");
  prev.textContent = "Back";
  prev.className = "nav-prev";
  prev.disabled = !form.canPrev();
  prev.addEventListener("click", () => { form.prev(); rerender(); });
  nav.appendChild(prev);

  if (!form.onLastPage) {
    const next = doc.createElement("button");
    next.textContent = "Next";
    next.className = "nav-next";
    next.disabled = !form.canNext();
    next.addEventListener("click", () => { form.next(); rerender(); });
    nav.appendChild(next);
  } else {
    const submit = doc.createElement("button");
    submit.textContent = "Submit";
    submit.className = "nav-submit";
    submit.disabled = !form.canSubmit();
    submit.addEventListener("click", () => {
      if (form.canSubmit()) onSubmit({ ...form.answers });
    });
    nav.appendChild(submit);
  }
  container.appendChild(nav);
}

function renderQuestion(doc: Document, form: QuestionnaireForm, qid: string,
                        question: Question, rerender: () => void): Element {
  const field = doc.createElement("div");
  field.className = `question widget-${question.widget}`;
  field.setAttribute("data-question", qid);

  if (!(KNOWN_WIDGETS as readonly string[]).includes(question.widget)) {
    field.className = "question widget-error";
    field.textContent = `This questionnaire uses an element ("${question.widget}") this app `
      + "version cannot display. Please update the app.";
    return field;
  }

  if (question.widget === "info") {
    const info = doc.createElement("p");
    info.className = "info-text";
    info.textContent = question.label;
    field.appendChild(info);
    return field;
  }

  const label = doc.createElement("label");
  label.textContent = question.label + (question.required ? " *" : "");
  field.appendChild(label);

  const current = form.answers[qid];
  const set = (value: AnswerValue | null) => { form.setAnswer(qid, value); rerender(); };

  switch (question.widget) {
    case "slider": {
      const input = doc.createElement("input");
      input.type = "range";
      input.min = String(question.min ?? 0);
      input.max = String(question.max ?? 100);
      input.step = String(question.step ?? 1);
      input.value = String(current ?? question.min ?? 0);
      const value = doc.createElement("span");
      value.className = "slider-value";
      value.textContent = current === undefined ? "—" : String(current);
      input.addEventListener("input", () => set(Number(input.value)));
      field.appendChild(input);
      field.appendChild(value);
      break;
    }
    case "checkbox": {
      const input = doc.createElement("input");
      input.type = "checkbox";
      input.checked = current === true;
      input.addEventListener("change", () => set(input.checked));
      field.appendChild(input);
      break;
    }
    case "radio": {
      for (const option of question.options ?? []) {
        const wrap = doc.createElement("label");
        wrap.className = "option";
        const input = doc.createElement("input");
        input.type = "radio";
        input.name = qid;
        input.value = option.id;
        input.checked = current === option.id;
        input.addEventListener("change", () => set(option.id));
        wrap.appendChild(input);
        wrap.appendChild(doc.createTextNode(option.label));
        field.appendChild(wrap);
      }
      break;
    }
    case "multiselect": {
      const selected = new Set(Array.isArray(current) ? current : []);
      for (const option of question.options ?? []) {
        const wrap = doc.createElement("label");
        wrap.className = "option";
        const input = doc.createElement("input");
        input.type = "checkbox";
        input.value = option.id;
        input.checked = selected.has(option.id);
        input.addEventListener("change", () => {
          input.checked ? selected.add(option.id) : selected.delete(option.id);
          set([...selected]);
        });
        wrap.appendChild(input);
        wrap.appendChild(doc.createTextNode(option.label));
        field.appendChild(wrap);
      }
      break;
    }
    case "number": {
      const input = doc.createElement("input");
      input.type = "number";
      if (question.min !== undefined) input.min = String(question.min);
      if (question.max !== undefined) input.max = String(question.max);
      input.value = current === undefined ? "" : String(current);
      input.addEventListener("change", () => {
        set(input.value === "" ? null : Number(input.value));
      });
      field.appendChild(input);
      break;
    }
    case "date": {
      const input = doc.createElement("input");
      input.type = "date";
      input.value = typeof current === "string" ? current : "";
      input.addEventListener("change", () => set(input.value || null));
      field.appendChild(input);
      break;
    }
    case "text": {
      const input = doc.createElement("textarea");
      input.value = typeof current === "string" ? current : "";
      input.addEventListener("change", () => set(input.value));
      field.appendChild(input);
      break;
    }
  }
  return field;
}
