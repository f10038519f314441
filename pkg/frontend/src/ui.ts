/** DOM views for the one-sample-at-a-time rating flow.
 *
 * Payload text only ever goes through textContent, never innerHTML, so
 * sample content cannot inject markup. Nothing rendered here includes
 * system or model identity — the client never receives it.
 */

import type { RatingFormState } from "./state.js";
import { DIMENSIONS, type Dimension } from "./types.js";

export const SCALE = [1, 2, 3, 4, 5] as const;

export interface FormHandlers {
  onScore(dimension: Dimension, value: number): void;
  onSubmit(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function labelFor(dimension: Dimension): string {
  return dimension.charAt(0).toUpperCase() + dimension.slice(1);
}

function sentenceColumn(
  title: string,
  sentences: readonly string[],
  kind: string,
): HTMLElement {
  const column = el("section", `column ${kind}`);
  column.appendChild(el("h2", "column-title", title));
  const list = el("ol", "sentences");
  for (const sentence of sentences) {
    const omitted = sentence === "";
    const item = el("li", omitted ? "sentence omitted" : "sentence");
    item.textContent = omitted ? "(omitted)" : sentence;
    list.appendChild(item);
  }
  column.appendChild(list);
  return column;
}

export function renderProgress(
  container: HTMLElement,
  rated: number,
  total: number,
): void {
  container.replaceChildren();
  const bar = el("div", "progress");
  bar.setAttribute("role", "progressbar");
  bar.setAttribute("aria-valuemin", "0");
  bar.setAttribute("aria-valuemax", String(total));
  bar.setAttribute("aria-valuenow", String(rated));
  const fill = el("div", "progress-fill");
  const pct = total > 0 ? (100 * rated) / total : 0;
  fill.style.width = `${pct.toFixed(1)}%`;
  bar.appendChild(fill);
  container.appendChild(bar);
  container.appendChild(el("span", "progress-label", `${rated} / ${total} rated`));
}

export function renderSample(
  container: HTMLElement,
  form: RatingFormState,
  activeIndex: number,
  errorMessage: string,
  handlers: FormHandlers,
): void {
  container.replaceChildren();
  const sample = form.sample;
  if (sample === null) return;

  const panes = el("div", "panes");
  panes.appendChild(
    sentenceColumn("Original abstract", sample.source_sentences, "source"),
  );
  panes.appendChild(
    sentenceColumn(
      "Plain-language adaptation",
      sample.adapted_sentences,
      "adapted",
    ),
  );
  container.appendChild(panes);

  const ratingForm = el("section", "rating-form");
  DIMENSIONS.forEach((dimension, index) => {
    const row = el(
      "div",
      index === activeIndex ? "dimension active" : "dimension",
    );
    row.dataset.dimension = dimension;
    row.appendChild(el("span", "dimension-name", labelFor(dimension)));
    const buttons = el("div", "scale");
    for (const value of SCALE) {
      const selected = form.get(dimension) === value;
      const button = el("button", selected ? "score selected" : "score");
      button.type = "button";
      button.textContent = String(value);
      button.dataset.dimension = dimension;
      button.dataset.value = String(value);
      button.setAttribute("aria-pressed", selected ? "true" : "false");
      button.addEventListener("click", () =>
        handlers.onScore(dimension, value),
      );
      buttons.appendChild(button);
    }
    row.appendChild(buttons);
    ratingForm.appendChild(row);
  });

  const error = el("div", "form-error", errorMessage);
  error.setAttribute("role", "alert");
  ratingForm.appendChild(error);

  const submit = el("button", "submit-rating", "Submit rating");
  submit.type = "button";
  submit.disabled = !form.complete || form.submitting;
  submit.addEventListener("click", () => handlers.onSubmit());
  ratingForm.appendChild(submit);

  ratingForm.appendChild(
    el(
      "p",
      "hint",
      "Keys 1–5 score the highlighted dimension, arrows move between dimensions, Enter submits.",
    ),
  );
  container.appendChild(ratingForm);
}

export function renderCompletion(container: HTMLElement, total: number): void {
  container.replaceChildren();
  const done = el("section", "completion");
  done.appendChild(el("h2", "", "Session complete"));
  done.appendChild(
    el("p", "completion-count", `All ${total} rated. Thank you!`),
  );
  container.appendChild(done);
}

export function renderBanner(
  container: HTMLElement,
  message: string,
  onRetry: () => void,
): void {
  container.replaceChildren();
  const banner = el("div", "banner");
  banner.setAttribute("role", "alert");
  banner.appendChild(el("span", "banner-message", message));
  const retry = el("button", "retry", "Retry");
  retry.type = "button";
  retry.addEventListener("click", onRetry);
  banner.appendChild(retry);
  container.appendChild(banner);
}

export function clearBanner(container: HTMLElement): void {
  container.replaceChildren();
}
