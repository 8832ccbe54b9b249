// @vitest-environment happy-dom
import { describe, expect, it } from "vitest";

import { QuestionnaireForm, renderQuestionnaire } from "../src/questionnaire.js";
import type { AnswerValue, LocalizedSchema } from "../src/types.js";

/** Two-page schema covering every widget kind the platform defines. */
function allWidgetSchema(): LocalizedSchema {
  return {
    kind: "questionnaire",
    schema_id: "diary",
    version: 1,
    module: "diary",
    language: "en",
    languages: ["en"],
    digest: "d".repeat(64),
    pages: [
      { index: 1, title: "Now", questions: ["q_info", "q_slider", "q_radio", "q_check"] },
      { index: 2, title: "Today", questions: ["q_number", "q_date", "q_multi", "q_text"] },
    ],
    questions: {
      q_info: { widget: "info", required: false, label: "Answer honestly." },
      q_slider: { widget: "slider", required: true, label: "Loudness", min: 0, max: 100, step: 1 },
      q_radio: { widget: "radio", required: true, label: "Mood",
                 options: [{ id: "good", label: "Good" }, { id: "bad", label: "Bad" }] },
      q_check: { widget: "checkbox", required: true, label: "Slept well" },
      q_number: { widget: "number", required: true, label: "Stress", min: 0, max: 10 },
      q_date: { widget: "date", required: false, label: "Onset" },
      q_multi: { widget: "multiselect", required: false, label: "Triggers",
                 options: [{ id: "noise", label: "Noise" }, { id: "stress", label: "Stress" }] },
      q_text: { widget: "text", required: false, label: "Notes" },
    },
  };
}

function render(form: QuestionnaireForm, onSubmit: (a: Record<string, AnswerValue>) => void = () => {}) {
  const container = document.createElement("div");
  document.body.appendChild(container);
  renderQuestionnaire(document, container, form, onSubmit);
  return container;
}

describe("questionnaire form", () => {
  it("renders every widget kind across the pages", () => {
    const form = new QuestionnaireForm(allWidgetSchema());
    const container = render(form);
    expect(form.pageCount).toBe(2);
    for (const widget of ["info", "slider", "radio", "checkbox"]) {
      expect(container.querySelector(`.widget-${widget}`), widget).not.toBeNull();
    }
    form.setAnswer("q_slider", 40);
    form.setAnswer("q_radio", "good");
    form.setAnswer("q_check", true);
    form.next();
    renderQuestionnaire(document, container, form, () => {});
    for (const widget of ["number", "date", "multiselect", "text"]) {
      expect(container.querySelector(`.widget-${widget}`), widget).not.toBeNull();
    }
  });

  it("keeps navigation strictly linear and gated on required answers", () => {
    const form = new QuestionnaireForm(allWidgetSchema());
    const container = render(form);
    expect(form.canNext()).toBe(false); // required q_slider/q_radio/q_check unanswered
    const next = container.querySelector(".nav-next") as HTMLButtonElement;
    expect(next.disabled).toBe(true);
    form.next();
    expect(form.page).toBe(0); // next() refuses while the page is incomplete

    form.setAnswer("q_slider", 10);
    form.setAnswer("q_radio", "bad");
    form.setAnswer("q_check", false);
    expect(form.canNext()).toBe(true);
    form.next();
    expect(form.page).toBe(1);
    form.next();
    expect(form.page).toBe(1); // last page: no further
    form.prev();
    expect(form.page).toBe(0);
  });

  it("enables submit only when all required questions everywhere are answered", () => {
    const form = new QuestionnaireForm(allWidgetSchema());
    form.setAnswer("q_slider", 10);
    form.setAnswer("q_radio", "good");
    form.setAnswer("q_check", true);
    form.next();
    expect(form.canSubmit()).toBe(false); // q_number still missing
    const container = render(form);
    const submit = container.querySelector(".nav-submit") as HTMLButtonElement;
    expect(submit.disabled).toBe(true);
    form.setAnswer("q_number", 5);
    expect(form.canSubmit()).toBe(true);
  });

  it("delivers the collected answers on submit", () => {
    const form = new QuestionnaireForm(allWidgetSchema());
    form.setAnswer("q_slider", 42);
    form.setAnswer("q_radio", "good");
    form.setAnswer("q_check", true);
    form.next();
    form.setAnswer("q_number", 3);
    form.setAnswer("q_multi", ["noise", "stress"]);
    let received: Record<string, AnswerValue> | null = null;
    const container = render(form, (answers) => { received = answers; });
    (container.querySelector(".nav-submit") as HTMLButtonElement).click();
    expect(received).toEqual({
      q_slider: 42, q_radio: "good", q_check: true, q_number: 3,
      q_multi: ["noise", "stress"],
    });
  });

  it("widgets write back into the form state", () => {
    const form = new QuestionnaireForm(allWidgetSchema());
    const container = render(form);
    const radio = container.querySelector(
      '.widget-radio input[value="good"]') as HTMLInputElement;
    radio.click();
    expect(form.answers.q_radio).toBe("good");
    const checkbox = container.querySelector(
      ".widget-checkbox input") as HTMLInputElement;
    checkbox.click();
    expect(form.answers.q_check).toBe(true);
  });

  it("blocks the whole form on an unknown widget kind", () => {
    const schema = allWidgetSchema();
    schema.questions.q_mystery = { widget: "hologram", required: false, label: "?" };
    schema.pages[0].questions.push("q_mystery");
    const form = new QuestionnaireForm(schema);
    const container = render(form);
    const placeholder = container.querySelector(".widget-error");
    expect(placeholder).not.toBeNull();
    expect(placeholder!.textContent).toContain("hologram");
    form.setAnswer("q_slider", 1);
    form.setAnswer("q_radio", "good");
    form.setAnswer("q_check", true);
    expect(form.canNext()).toBe(false);
    expect(form.canSubmit()).toBe(false);
  });

  it("shows an empty state for a questionnaire without questions", () => {
    const schema = allWidgetSchema();
    schema.pages = [];
    schema.questions = {};
    const form = new QuestionnaireForm(schema);
    const container = render(form);
    expect(container.querySelector(".empty-state")).not.toBeNull();
    expect(form.canSubmit()).toBe(false);
  });
});
