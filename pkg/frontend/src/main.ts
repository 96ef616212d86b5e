// DOM wiring. All protocol logic lives in view.ts/state.ts; this file only
// renders and forwards events.

import { AnnotationApi, ConflictError, ValidationError } from "./api.js";
import type { BatchWire } from "./protocol.js";
import { SelectionStore } from "./state.js";
import {
  batchComplete,
  buildSubmission,
  completedCount,
  itemComplete,
  keyToValue,
  scaleRows,
  setSelection,
  validateItem,
  type Selections,
} from "./view.js";

const params = new URLSearchParams(window.location.search);
const annotatorId = params.get("annotator") ?? "annotator_1";
const apiBase = params.get("api") ?? "";

const api = new AnnotationApi(apiBase);
const store = new SelectionStore(window.localStorage, annotatorId);

let batch: BatchWire | null = null;
let selections: Selections = {};
let currentIndex = 0;
let activeRow = 0;
let submittedTotal = 0;

const root = document.getElementById("app") as HTMLElement;

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function banner(kind: "error" | "info", message: string, retry?: () => void): HTMLElement {
  const box = el("div", `banner banner-${kind}`);
  box.appendChild(el("span", "banner-text", message));
  if (retry) {
    const button = el("button", "retry", "Retry") as HTMLButtonElement;
    button.addEventListener("click", retry);
    box.appendChild(button);
  }
  return box;
}

function select(snippetId: string, dimension: string, value: number): void {
  selections = setSelection(selections, snippetId, dimension, value);
  if (batch?.batch_id) {
    store.save(batch.batch_id, selections);
  }
  render();
}

function renderItem(container: HTMLElement): void {
  if (!batch) {
    return;
  }
  const item = batch.items[currentIndex];
  if (!item) {
    return;
  }
  const problem = validateItem(item);
  if (problem) {
    container.appendChild(banner("error", `Malformed item from server: ${problem}`));
    return;
  }

  const header = el("div", "item-header");
  header.appendChild(
    el("span", "item-position", `Snippet ${currentIndex + 1} of ${batch.items.length}`),
  );
  header.appendChild(
    el("span", "item-done", `${completedCount(batch, selections)} fully rated`),
  );
  container.appendChild(header);
  container.appendChild(el("p", "snippet-text", item.text));

  const chosen = selections[item.snippet_id] ?? {};
  scaleRows(item).forEach((row, rowIndex) => {
    const rowBox = el("div", rowIndex === activeRow ? "scale-row active" : "scale-row");
    rowBox.appendChild(el("span", "scale-label scale-left", row.leftLabel));
    const options = el("span", "scale-options");
    for (const value of row.values) {
      const label = el("label", "scale-point");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = `${item.snippet_id}:${row.dimension}`;
      input.value = String(value);
      input.checked = chosen[row.dimension] === value;
      input.addEventListener("change", () => select(item.snippet_id, row.dimension, value));
      label.appendChild(input);
      label.appendChild(el("span", "scale-value", String(value)));
      options.appendChild(label);
    }
    rowBox.appendChild(options);
    rowBox.appendChild(el("span", "scale-label scale-right", row.rightLabel));
    rowBox.addEventListener("click", () => {
      activeRow = rowIndex;
    });
    container.appendChild(rowBox);
  });

  const nav = el("div", "nav");
  const prev = el("button", "nav-prev", "Previous") as HTMLButtonElement;
  prev.disabled = currentIndex === 0;
  prev.addEventListener("click", () => {
    currentIndex -= 1;
    activeRow = 0;
    render();
  });
  const next = el("button", "nav-next", "Next") as HTMLButtonElement;
  next.disabled =
    currentIndex >= batch.items.length - 1 || !itemComplete(item, selections);
  next.addEventListener("click", () => {
    currentIndex += 1;
    activeRow = 0;
    render();
  });
  nav.appendChild(prev);
  nav.appendChild(next);

  const submit = el("button", "submit", "Submit batch") as HTMLButtonElement;
  submit.disabled = !batchComplete(batch, selections);
  submit.addEventListener("click", () => void submitBatch());
  nav.appendChild(submit);
  container.appendChild(nav);
}

let lastError: { message: string; retry?: () => void } | null = null;

function render(): void {
  root.replaceChildren();
  const title = el("h1", "title", "Civility rating");
  root.appendChild(title);
  root.appendChild(
    el("div", "annotator", `Annotator: ${annotatorId} · ${submittedTotal} snippets submitted`),
  );
  if (lastError) {
    root.appendChild(banner("error", lastError.message, lastError.retry));
  }
  if (!batch) {
    root.appendChild(el("p", "status", "Loading batch…"));
    return;
  }
  if (batch.done || batch.items.length === 0) {
    root.appendChild(el("p", "status", "All batches are done. Thank you!"));
    return;
  }
  renderItem(root);
}

async function loadBatch(): Promise<void> {
  lastError = null;
  try {
    batch = await api.nextBatch(annotatorId);
    selections = batch.batch_id ? store.load(batch.batch_id) : {};
    currentIndex = 0;
    activeRow = 0;
  } catch (error) {
    lastError = {
      message: `Could not load the next batch: ${String(error)}`,
      retry: () => void loadBatch(),
    };
  }
  render();
}

async function submitBatch(): Promise<void> {
  if (!batch?.batch_id) {
    return;
  }
  lastError = null;
  const body = buildSubmission(batch, selections);
  try {
    const ack = await api.submitRatings(annotatorId, batch.batch_id, body);
    submittedTotal += ack.stored / 4;
    store.clear();
    await loadBatch();
  } catch (error) {
    if (error instanceof ConflictError) {
      // Already stored server-side; keep local state untouched and move on.
      lastError = { message: "This batch was already submitted; loading the next one." };
      await loadBatch();
    } else if (error instanceof ValidationError) {
      const first = error.problems[0];
      lastError = {
        message: first
          ? `Rejected: ${first.problem} (snippet ${first.snippet_id ?? "?"}, ${first.dimension ?? "?"})`
          : "Rejected by the server.",
      };
      render();
    } else {
      lastError = {
        message: `Network problem while submitting; your ratings are kept locally. ${String(error)}`,
        retry: () => void submitBatch(),
      };
      render();
    }
  }
}

document.addEventListener("keydown", (event) => {
  if (!batch || batch.done) {
    return;
  }
  const item = batch.items[currentIndex];
  if (!item) {
    return;
  }
  const value = keyToValue(event.key);
  if (value !== null) {
    const rows = scaleRows(item);
    const row = rows[activeRow];
    if (row) {
      select(item.snippet_id, row.dimension, value);
      activeRow = Math.min(activeRow + 1, rows.length - 1);
      render();
    }
  }
});

void loadBatch();
