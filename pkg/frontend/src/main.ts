import { ApiClient, ApiError } from "./api";
import { renderInspector } from "./inspector";
import { GraphRenderer, statOptions } from "./render";
import { canSubmit } from "./selection";
import { renderWarnings } from "./warnings";
import type { DiagnosticsEntry, ModeDoc, ModesDoc, ReportDoc } from "./types";
import "./style.css";

const api = new ApiClient();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showError(message: string): void {
  const panel = el<HTMLDivElement>("error-panel");
  panel.textContent = message;
  panel.hidden = false;
}

function renderModeList(
  container: HTMLElement,
  modes: ModeDoc[],
  onInspect: (mode: ModeDoc) => void,
): void {
  container.replaceChildren();
  for (const mode of modes) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.className = "mode-link";
    button.textContent =
      `#${mode.id} ${mode.provenance === "manual" ? "[manual] " : ""}` +
      `size ${mode.stats.size}, acc ${(mode.stats.accuracy * 100).toFixed(1)}%`;
    button.addEventListener("click", () => onInspect(mode));
    item.appendChild(button);
    container.appendChild(item);
  }
}

async function boot(): Promise<void> {
  let graph;
  try {
    graph = await api.fetchGraph();
  } catch (error) {
    showError(`cannot load graph: ${error instanceof Error ? error.message : error}`);
    return;
  }

  let report: ReportDoc | null = null;
  try {
    report = await api.fetchReport();
  } catch {
    report = null; // report is optional until an evaluate run exists
  }
  let modesDoc: ModesDoc = { schema: "failure-modes/1", modes: [] };
  try {
    modesDoc = await api.fetchModes();
  } catch {
    // no modes yet is fine
  }

  const summary = el<HTMLSpanElement>("graph-summary");
  summary.textContent =
    `${graph.nodes.length} nodes, ${graph.edges.length} edges` +
    (report ? `, coverage ${(report.graph_summary.coverage * 100).toFixed(1)}%` : "");

  const submitButton = el<HTMLButtonElement>("submit-selection");
  const selectionInfo = el<HTMLSpanElement>("selection-info");
  const warningsBox = el<HTMLDivElement>("selection-warnings");
  let inFlight = false;

  const renderer = new GraphRenderer(el("graph-container"), graph, {
    onSelectionChange: (ids) => {
      selectionInfo.textContent = ids.length ? `${ids.length} nodes selected` : "no selection";
      submitButton.disabled = !canSubmit(renderer.selection, inFlight);
    },
  });

  const statSelect = el<HTMLSelectElement>("color-stat");
  const stats = statOptions(graph);
  for (const stat of stats) {
    const option = document.createElement("option");
    option.value = stat;
    option.textContent = stat;
    statSelect.appendChild(option);
  }
  statSelect.value = stats.includes("error_measure") ? "error_measure" : stats[0];
  statSelect.addEventListener("change", () => renderer.render(statSelect.value));
  renderer.render(statSelect.value);

  const inspectorBox = el<HTMLDivElement>("inspector");
  const referenceOptions = () => [
    "dataset",
    ...modesDoc.modes.map((m) => String(m.id)),
  ];

  async function inspect(mode: ModeDoc, reference = "dataset"): Promise<void> {
    let diagnostics: DiagnosticsEntry | null = null;
    try {
      diagnostics = await api.fetchModeDiagnostics(mode.id, reference);
    } catch {
      // fall back to the report's precomputed diagnostics, else prompt
      diagnostics = report?.diagnostics?.[String(mode.id)] ?? null;
    }
    renderInspector(inspectorBox, mode, diagnostics, referenceOptions(), (ref) => {
      void inspect(mode, ref);
    });
  }

  const refreshModes = async () => {
    modesDoc = await api.fetchModes();
    renderModeList(el("mode-list"), modesDoc.modes, (mode) => void inspect(mode));
  };
  await refreshModes();

  submitButton.addEventListener("click", async () => {
    if (!canSubmit(renderer.selection, inFlight)) return;
    inFlight = true;
    submitButton.disabled = true;
    try {
      const response = await api.submitSelection(renderer.selection.ids());
      renderWarnings(warningsBox, response.warnings);
      await refreshModes();
      renderer.clearSelection();
      void inspect(response.mode);
    } catch (error) {
      if (error instanceof ApiError) {
        renderWarnings(warningsBox, [error.message]); // server text verbatim
      } else {
        showError(String(error));
      }
    } finally {
      inFlight = false;
      submitButton.disabled = !canSubmit(renderer.selection, false);
    }
  });
}

void boot();
