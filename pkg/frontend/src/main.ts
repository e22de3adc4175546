// DOM glue: wires the annotation flow and dashboard formatting to the page.
// All state transitions live in flow.ts; all number formatting in
// dashboard.ts; this file only renders and forwards events.

import { ApiClient, ApiError } from "./api.js";
import { AnnotationFlow, DIMENSIONS, Dimension } from "./flow.js";
import { formatReport } from "./dashboard.js";

const client = new ApiClient("");

let flow: AnnotationFlow | null = null;
let sessionId = "";
let focusedDimension: Dimension = DIMENSIONS[0];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showError(message: string | null): void {
  const banner = el<HTMLDivElement>("error");
  banner.textContent = message ?? "";
  banner.hidden = !message;
}

function renderRatingButtons(): void {
  const container = el<HTMLDivElement>("dimensions");
  container.innerHTML = "";
  for (const dimension of DIMENSIONS) {
    const row = document.createElement("div");
    row.className = "dimension-row" + (dimension === focusedDimension ? " focused" : "");
    row.dataset.dimension = dimension;
    const label = document.createElement("span");
    label.className = "dimension-label";
    label.textContent = dimension;
    row.appendChild(label);
    for (let value = 1; value <= 5; value++) {
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = String(value);
      const selected = flow?.state.ratings[dimension] === value;
      button.className = "rating" + (selected ? " selected" : "");
      button.addEventListener("click", () => {
        focusedDimension = dimension;
        flow?.setRating(dimension, value);
        render();
      });
      row.appendChild(button);
    }
    row.addEventListener("click", () => {
      focusedDimension = dimension;
      render();
    });
    container.appendChild(row);
  }
}

function render(): void {
  const card = el<HTMLDivElement>("task-card");
  const doneBox = el<HTMLDivElement>("done");
  const progress = el<HTMLSpanElement>("progress");
  const submit = el<HTMLButtonElement>("submit");
  if (!flow) {
    card.hidden = true;
    doneBox.hidden = true;
    return;
  }
  const state = flow.state;
  progress.textContent = `${state.scored}/${state.total} scored`;
  showError(state.error);
  if (state.phase === "done") {
    card.hidden = true;
    doneBox.hidden = false;
    doneBox.textContent = `All tasks scored (${state.scored}/${state.total}). Thank you.`;
    return;
  }
  if (state.phase !== "rating" || !state.task) {
    card.hidden = true;
    doneBox.hidden = true;
    return;
  }
  card.hidden = false;
  doneBox.hidden = true;
  el<HTMLDivElement>("question").textContent = state.task.question;
  el<HTMLDivElement>("generated").textContent = state.task.generated;
  const gold = el<HTMLDivElement>("gold");
  if (state.task.gold_answer) {
    gold.hidden = false;
    gold.textContent = `Gold answer: ${state.task.gold_answer}`;
  } else {
    gold.hidden = true;
  }
  renderRatingButtons();
  submit.disabled = !flow.canSubmit(); // all four dimensions required
}

async function startSession(): Promise<void> {
  const annotator = el<HTMLInputElement>("annotator").value.trim();
  if (!annotator) {
    showError("enter an annotator name first");
    return;
  }
  try {
    const sessions = await client.listSessions();
    if (sessions.sessions.length > 0) {
      sessionId = sessions.sessions[0].session_id;
    } else {
      const created = await client.createSession({});
      sessionId = created.session_id;
    }
  } catch (err) {
    showError(err instanceof ApiError ? err.message : String(err));
    return;
  }
  flow = new AnnotationFlow(client, sessionId, annotator);
  await flow.start();
  render();
}

async function submitCurrent(): Promise<void> {
  if (!flow || !flow.canSubmit()) return;
  const comment = el<HTMLTextAreaElement>("comment");
  flow.setComment(comment.value);
  const state = await flow.submit();
  if (!state.error) {
    comment.value = ""; // keep the comment when the service rejected
  }
  render();
}

async function refreshDashboard(): Promise<void> {
  if (!sessionId) {
    showError("start a session first");
    return;
  }
  let report;
  try {
    report = await client.report(sessionId);
  } catch (err) {
    showError(err instanceof ApiError ? err.message : String(err));
    return;
  }
  const model = formatReport(report);
  const container = el<HTMLDivElement>("dashboard-tables");
  container.innerHTML = "";
  if (model.empty) {
    container.textContent = "no data yet";
    return;
  }
  container.appendChild(buildTable(model.meansHeader, model.meansRows, "Score means"));
  if (model.correlationRows) {
    container.appendChild(
      buildTable(model.correlationHeader, model.correlationRows, "Correlation vs human"),
    );
  }
  for (const note of model.omittedNotes) {
    const p = document.createElement("p");
    p.className = "omitted";
    p.textContent = `omitted: ${note}`;
    container.appendChild(p);
  }
}

function buildTable(header: string[], rows: string[][], caption: string): HTMLTableElement {
  const table = document.createElement("table");
  table.createCaption().textContent = caption;
  const head = table.createTHead().insertRow();
  for (const cell of header) {
    const th = document.createElement("th");
    th.textContent = cell;
    head.appendChild(th);
  }
  const body = table.createTBody();
  for (const row of rows) {
    const tr = body.insertRow();
    for (const cell of row) {
      tr.insertCell().textContent = cell;
    }
  }
  return table;
}

function onKeydown(event: KeyboardEvent): void {
  if (!flow || flow.state.phase !== "rating") return;
  if (event.target instanceof HTMLInputElement || event.target instanceof HTMLTextAreaElement) {
    return;
  }
  if (event.key >= "1" && event.key <= "5") {
    flow.setRating(focusedDimension, Number(event.key));
    const index = DIMENSIONS.indexOf(focusedDimension);
    focusedDimension = DIMENSIONS[Math.min(index + 1, DIMENSIONS.length - 1)];
    render();
  } else if (event.key === "Enter" && flow.canSubmit()) {
    void submitCurrent();
  } else if (event.key === "Tab") {
    event.preventDefault();
    const index = DIMENSIONS.indexOf(focusedDimension);
    focusedDimension = DIMENSIONS[(index + 1) % DIMENSIONS.length];
    render();
  }
}

export function init(): void {
  el<HTMLButtonElement>("start").addEventListener("click", () => void startSession());
  el<HTMLButtonElement>("submit").addEventListener("click", () => void submitCurrent());
  el<HTMLButtonElement>("refresh-dashboard").addEventListener(
    "click",
    () => void refreshDashboard(),
  );
  document.addEventListener("keydown", onKeydown);
}

if (typeof document !== "undefined" && document.getElementById("start")) {
  init();
}
