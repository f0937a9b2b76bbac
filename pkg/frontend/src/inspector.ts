// Mode-inspector data shaping and rendering: prediction-distribution bars
// and the top-KS feature table. All numbers come straight from service
// payloads; nothing is recomputed here.

import type { DiagnosticsEntry, ModeDoc } from "./types";

export interface Bar {
  label: string;
  count: number;
  /** count / max count; used directly as the bar height fraction */
  fraction: number;
}

export function predictionBars(distribution: Record<string, number> | null): Bar[] {
  if (!distribution) return [];
  const entries = Object.entries(distribution);
  const maxCount = Math.max(...entries.map(([, c]) => c), 1);
  return entries
    .map(([label, count]) => ({ label, count, fraction: count / maxCount }))
    .sort((a, b) => Number(a.label) - Number(b.label));
}

export function renderInspector(
  container: HTMLElement,
  mode: ModeDoc,
  diagnostics: DiagnosticsEntry | null,
  referenceOptions: string[],
  onReferenceChange: (reference: string) => void,
): void {
  container.replaceChildren();

  const title = document.createElement("h3");
  title.textContent =
    `Mode ${mode.id} (${mode.provenance}) — ${mode.stats.size} members, ` +
    `accuracy ${(mode.stats.accuracy * 100).toFixed(2)}%, ` +
    `ground truth ${mode.stats.ground_truth_mode}`;
  container.appendChild(title);

  const bars = predictionBars(mode.stats.prediction_distribution);
  if (bars.length > 0) {
    const chart = document.createElement("div");
    chart.className = "bar-chart";
    for (const bar of bars) {
      const column = document.createElement("div");
      column.className = "bar-column";
      const rect = document.createElement("div");
      rect.className = "bar-rect";
      rect.style.height = `${Math.round(bar.fraction * 100)}%`;
      rect.title = `${bar.count}`;
      rect.dataset.count = String(bar.count);
      rect.dataset.label = bar.label;
      const caption = document.createElement("span");
      caption.textContent = Number(bar.label).toString();
      column.append(rect, caption);
      chart.appendChild(column);
    }
    const chartLabel = document.createElement("p");
    chartLabel.className = "muted";
    chartLabel.textContent = "Predicted-label distribution";
    container.append(chartLabel, chart);
  }

  const refRow = document.createElement("p");
  refRow.className = "muted";
  refRow.append("Top features by KS vs ");
  const select = document.createElement("select");
  select.className = "reference-select";
  for (const option of referenceOptions) {
    const el = document.createElement("option");
    el.value = option;
    el.textContent = option === "dataset" ? "whole dataset" : `mode ${option}`;
    select.appendChild(el);
  }
  if (diagnostics) {
    const current = diagnostics.reference.replace(/^mode:/, "");
    select.value = referenceOptions.includes(current) ? current : "dataset";
  }
  select.addEventListener("change", () => onReferenceChange(select.value));
  refRow.appendChild(select);
  container.appendChild(refRow);

  if (!diagnostics) {
    const prompt = document.createElement("p");
    prompt.className = "warning";
    prompt.textContent = "No diagnostics for this mode yet — run `failmap diagnose`.";
    container.appendChild(prompt);
    return;
  }

  const table = document.createElement("table");
  table.className = "ks-table";
  const head = table.insertRow();
  for (const text of ["feature", "column", "KS"]) {
    const cell = document.createElement("th");
    cell.textContent = text;
    head.appendChild(cell);
  }
  for (const feature of diagnostics.top_features) {
    const row = table.insertRow();
    row.insertCell().textContent = feature.name;
    row.insertCell().textContent = String(feature.column);
    row.insertCell().textContent = feature.ks.toFixed(4);
  }
  container.appendChild(table);
}
